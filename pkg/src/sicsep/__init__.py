"""sicsep: entanglement criteria built on SIC and GSIC POVMs.

sicsep measures every subsystem of a multipartite density matrix with a
(generalized) symmetric informationally complete POVM, assembles correlation
matrices over a partition tree and compares their trace norm with the bound
every fully separable state obeys.

Key features:
    - Qubit SIC-POVM and the explicit d=2 / d=3 GSIC families, with validation
    - Bipartite, tripartite and N-partite correlation matrices in three modes
    - Separable bounds for renormalized and POVM-normalized measurements
    - Scans over every canonical partition, parameter sweeps to CSV
    - Reproduction of the four worked examples as figure-ready data

Example:
    >>> from sicsep.criteria import evaluate
    >>> from sicsep.models import CorrelationMode
    >>> from sicsep.povm import resolve_povms
    >>> from sicsep.states import build_named_state
    >>> rho = build_named_state("example1_rho")
    >>> povms = resolve_povms("sic2", rho.dims, normalization="renormalized")
    >>> evaluate(rho, povms, "A|(B|C)", CorrelationMode.UNFOLDING).verdict
    <Verdict.ENTANGLED: 'ENTANGLED'>
"""

__all__ = ["__version__"]

__version__ = "0.1.0"
