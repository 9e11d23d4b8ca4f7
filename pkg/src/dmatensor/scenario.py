"""Synthetic scenario generation, noisy measurement simulation, dataset I/O.

Stands in for physical experiments: ground-truth parameters are drawn from
seeded random distributions, end-to-end channels are "measured" by running
the forward model and adding white complex Gaussian noise calibrated to a
requested SNR (total signal energy over total noise energy, in dB).

Datasets are stored as versioned UTF-8 JSON.  Complex matrices are encoded
as ``{"rows": R, "cols": C, "data": [[re, im], ...]}`` with entries in
column-major (vec) order; see README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DatasetFormatError, DatasetVersionError
from .network_model import SystemParameters, end_to_end

DATASET_VERSION = 1


@dataclass(frozen=True)
class ScenarioSpec:
    """Knobs of one synthetic scenario."""

    n_f: int
    n_m: int
    n_u: int
    coupling_strength: float = 0.0
    snr_db: float | None = None
    seed: int = 0
    alpha: complex = 0.0
    beta: complex = 1.0

    def __post_init__(self):
        if min(self.n_f, self.n_m, self.n_u) < 1:
            raise ValueError("all dimensions must be positive")
        if not 0.0 <= self.coupling_strength < 1.0:
            raise ValueError("coupling_strength must lie in [0, 1)")


@dataclass(frozen=True)
class MeasurementSet:
    """Configurations with their measured (possibly noisy) channel slices."""

    configs: np.ndarray          # K x N_M binary
    h_meas: np.ndarray           # N_U x N_F x K
    snr_db: float | None
    noise_seed: int | None
    scenario_ref: str = ""

    def __post_init__(self):
        configs = np.atleast_2d(np.asarray(self.configs)).astype(np.uint8)
        h = np.asarray(self.h_meas, dtype=complex)
        if h.ndim != 3:
            raise ValueError("h_meas must be a third-order stack")
        if h.shape[2] != configs.shape[0]:
            raise ValueError("third dimension of h_meas must equal the number of configs")
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "h_meas", h)

    @property
    def k(self) -> int:
        return self.configs.shape[0]

    @property
    def n_m(self) -> int:
        return self.configs.shape[1]


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def generate_params(spec: ScenarioSpec) -> SystemParameters:
    """Draw ground-truth parameters for a scenario, deterministically from its seed.

    ``h0``, ``a`` and ``b`` have i.i.d. unit-variance circular complex
    Gaussian entries.  ``gamma`` is a symmetrized Gaussian matrix rescaled so
    that ``||gamma||_2 * max(|alpha|, |beta|) == coupling_strength``, which
    keeps ``I - Phi Gamma`` invertible for every binary configuration.
    """
    rng = np.random.default_rng(spec.seed)
    h0 = _complex_gaussian(rng, (spec.n_u, spec.n_f))
    a = _complex_gaussian(rng, (spec.n_u, spec.n_m))
    b = _complex_gaussian(rng, (spec.n_m, spec.n_f))
    if spec.coupling_strength == 0.0:
        gamma = np.zeros((spec.n_m, spec.n_m), dtype=complex)
    else:
        raw = _complex_gaussian(rng, (spec.n_m, spec.n_m))
        sym = (raw + raw.T) / 2.0
        load_scale = max(abs(spec.alpha), abs(spec.beta))
        if load_scale == 0.0:
            load_scale = 1.0  # degenerate all-zero loads: target the bare norm
        gamma = sym * (spec.coupling_strength / (np.linalg.norm(sym, 2) * load_scale))
    return SystemParameters(h0=h0, a=a, gamma=gamma, b=b, alpha=spec.alpha, beta=spec.beta)


def sample_configs(
    n_m: int,
    k: int,
    seed: int,
    prepend_reference: bool = False,
    allow_duplicates: bool = False,
) -> np.ndarray:
    """Draw ``k`` random binary configurations (fair coin per bit), seeded.

    By default the drawn configurations are pairwise distinct (and distinct
    from the all-zeros reference when it is prepended).  Returns a
    ``(k [+1]) x n_m`` uint8 array with the reference first when requested.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    if allow_duplicates:
        drawn = rng.integers(0, 2, size=(k, n_m), dtype=np.uint8)
    else:
        capacity = 2**n_m if n_m < 63 else None
        needed = k + (1 if prepend_reference else 0)
        if capacity is not None and needed > capacity:
            raise ValueError(f"cannot draw {needed} distinct configurations of {n_m} bits")
        seen: set[bytes] = set()
        if prepend_reference:
            seen.add(bytes(n_m))
        rows = []
        while len(rows) < k:
            batch = rng.integers(0, 2, size=(max(k - len(rows), 16), n_m), dtype=np.uint8)
            for row in batch:
                key = row.tobytes()
                if key not in seen:
                    seen.add(key)
                    rows.append(row)
                    if len(rows) == k:
                        break
        drawn = np.stack(rows)
    if prepend_reference:
        return np.vstack([np.zeros((1, n_m), dtype=np.uint8), drawn])
    return drawn


def measure(
    p: SystemParameters,
    configs,
    snr_db: float | None = None,
    noise_seed: int | None = None,
    scenario_ref: str = "",
) -> MeasurementSet:
    """Run the forward model for each configuration and add calibrated noise.

    The complex noise variance is chosen so that the expected total noise
    energy is ``10**(-snr_db/10)`` times the total signal energy over all
    slices.  Noise for slice ``k`` comes from an independent stream keyed by
    ``(noise_seed, k)``, so results do not depend on evaluation order.
    """
    configs = np.atleast_2d(np.asarray(configs))
    k_total = configs.shape[0]
    h = np.zeros((p.n_u, p.n_f, k_total), dtype=complex)
    for k in range(k_total):
        h[:, :, k] = end_to_end(p, configs[k])

    if snr_db is not None:
        signal_energy = float(np.sum(np.abs(h) ** 2))
        per_entry_var = signal_energy / h.size * 10.0 ** (-snr_db / 10.0)
        sigma = np.sqrt(per_entry_var)
        base = 0 if noise_seed is None else noise_seed
        for k in range(k_total):
            rng = np.random.default_rng(np.random.SeedSequence([base, k]))
            h[:, :, k] += sigma * _complex_gaussian(rng, (p.n_u, p.n_f))

    return MeasurementSet(
        configs=configs,
        h_meas=h,
        snr_db=snr_db,
        noise_seed=noise_seed,
        scenario_ref=scenario_ref,
    )


def encode_complex_matrix(m: np.ndarray) -> dict:
    """JSON form of a complex matrix: explicit shape plus [re, im] pairs in vec order."""
    m = np.asarray(m, dtype=complex)
    flat = m.reshape(-1, order="F")
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def decode_complex_matrix(obj, name: str) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        data = obj["data"]
    except (TypeError, KeyError) as err:
        raise DatasetFormatError(f"field '{name}' is not a valid matrix object") from err
    if len(data) != rows * cols:
        raise DatasetFormatError(f"field '{name}' has {len(data)} entries, expected {rows * cols}")
    flat = np.array([complex(re, im) for re, im in data])
    return flat.reshape(rows, cols, order="F")


def _encode_scalar(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def save_dataset(ms: MeasurementSet, p: SystemParameters | None, path) -> None:
    """Write a measurement set, optionally with its ground-truth parameters.

    When ``p`` is given, the known system-side parameters (alpha, beta,
    gamma) and the ground-truth channels (h0, a, b) are embedded; estimation
    and evaluation tooling reads them according to the selected problem
    type.  When ``p`` is None only the measurements are stored.
    """
    doc: dict = {
        "version": DATASET_VERSION,
        "dims": {
            "n_u": int(ms.h_meas.shape[0]),
            "n_f": int(ms.h_meas.shape[1]),
            "n_m": int(ms.n_m),
            "k": int(ms.k),
        },
        "alpha": _encode_scalar(p.alpha) if p is not None else None,
        "beta": _encode_scalar(p.beta) if p is not None else None,
    }
    if p is not None:
        doc["gamma"] = encode_complex_matrix(p.gamma)
    doc["configs"] = ms.configs.astype(int).tolist()
    doc["h_meas"] = [encode_complex_matrix(ms.h_meas[:, :, k]) for k in range(ms.k)]
    doc["snr_db"] = None if ms.snr_db is None else float(ms.snr_db)
    doc["seeds"] = {"noise": None if ms.noise_seed is None else int(ms.noise_seed)}
    doc["scenario_ref"] = ms.scenario_ref
    if p is not None:
        doc["ground_truth"] = {
            "h0": encode_complex_matrix(p.h0),
            "a": encode_complex_matrix(p.a),
            "b": encode_complex_matrix(p.b),
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_dataset(path) -> tuple[MeasurementSet, SystemParameters | None]:
    """Read a dataset file; returns the parameters only if they were embedded."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise DatasetFormatError(f"not valid JSON: {err.msg}", offset=err.pos) from err
    if not isinstance(doc, dict):
        raise DatasetFormatError("top-level value must be an object")
    version = doc.get("version")
    if version != DATASET_VERSION:
        raise DatasetVersionError(f"unsupported dataset version {version!r}, expected {DATASET_VERSION}")

    for field_name in ("dims", "configs", "h_meas", "seeds"):
        if field_name not in doc:
            raise DatasetFormatError(f"missing required field '{field_name}'")
    dims = doc["dims"]
    try:
        n_u, n_f, n_m, k = (int(dims[key]) for key in ("n_u", "n_f", "n_m", "k"))
    except (TypeError, KeyError) as err:
        raise DatasetFormatError("field 'dims' must contain n_u, n_f, n_m, k") from err

    configs = np.asarray(doc["configs"], dtype=np.uint8)
    if configs.shape != (k, n_m):
        raise DatasetFormatError(f"configs shape {configs.shape} does not match dims ({k}, {n_m})")
    slices = doc["h_meas"]
    if len(slices) != k:
        raise DatasetFormatError(f"h_meas has {len(slices)} blocks, expected {k}")
    h = np.zeros((n_u, n_f, k), dtype=complex)
    for idx, block in enumerate(slices):
        mat = decode_complex_matrix(block, f"h_meas[{idx}]")
        if mat.shape != (n_u, n_f):
            raise DatasetFormatError(f"h_meas[{idx}] has shape {mat.shape}, expected ({n_u}, {n_f})")
        h[:, :, idx] = mat

    seeds = doc["seeds"]
    noise_seed = seeds.get("noise") if isinstance(seeds, dict) else None
    ms = MeasurementSet(
        configs=configs,
        h_meas=h,
        snr_db=doc.get("snr_db"),
        noise_seed=noise_seed,
        scenario_ref=doc.get("scenario_ref", ""),
    )

    params = None
    if "ground_truth" in doc:
        if doc.get("alpha") is None or doc.get("beta") is None or "gamma" not in doc:
            raise DatasetFormatError("ground_truth present but alpha/beta/gamma missing")
        gt = doc["ground_truth"]
        params = SystemParameters(
            h0=decode_complex_matrix(gt["h0"], "ground_truth.h0"),
            a=decode_complex_matrix(gt["a"], "ground_truth.a"),
            gamma=decode_complex_matrix(doc["gamma"], "gamma"),
            b=decode_complex_matrix(gt["b"], "ground_truth.b"),
            alpha=complex(*doc["alpha"]),
            beta=complex(*doc["beta"]),
        )
    return ms, params
