"""Regenerate the FCIDUMP fixtures under tests/data/.

Needs pyscf, which is not a runtime dependency of the package.

    python scripts/make_fixtures.py
"""
from pathlib import Path

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf
from pyscf.tools import fcidump

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"


def h2_sto3g():
    mol = gto.M(atom="H 0 0 0; H 0 0 0.7414", basis="sto-3g", verbose=0)
    mf = scf.RHF(mol).run()
    fcidump.from_scf(mf, str(DATA / "h2_sto3g.fcidump"), tol=1e-14)


def water_cas46():
    # R(OH) = 0.95778 A, angle(HOH) = 104.47984 deg, cc-pVDZ
    half = np.deg2rad(104.47984) / 2
    r = 0.95778
    mol = gto.M(
        atom=[["O", (0, 0, 0)],
              ["H", (0, r * np.sin(half), r * np.cos(half))],
              ["H", (0, -r * np.sin(half), r * np.cos(half))]],
        basis="cc-pvdz",
        verbose=0,
    )
    mf = scf.RHF(mol).run()
    cas = mcscf.CASCI(mf, 6, 4)
    h1, ecore = cas.get_h1eff()
    eri = ao2mo.restore(1, cas.get_h2eff(), 6)
    fcidump.from_integrals(
        str(DATA / "h2o_cas46.fcidump"), h1, eri, 6, 4, nuc=ecore, ms=0, tol=1e-12
    )
    cas.kernel()
    print("water CAS(4,6) CASCI energy", cas.e_tot)


if __name__ == "__main__":
    DATA.mkdir(parents=True, exist_ok=True)
    h2_sto3g()
    water_cas46()
