import numpy as np
import pytest

from homogenize.diffusivity import effective_matrix, one_d_exact
from homogenize.environment import (BondField, DisorderLaw, TorusGeometry,
                                    sample_environment)
from homogenize.experiments import (CampaignConfig, concentration_study,
                                    config_hash, convergence_study,
                                    hamming_sensitivity, records_to_csv,
                                    replica_seed, resolvent_convergence,
                                    run_campaign, surface_tension,
                                    summary_to_json)
from homogenize.solver import ConvergenceError
from homogenize.spectral import diffusivity_via_spectrum

TWO_SITE = BondField(TorusGeometry(1, 1), 2.0, np.array([[2.0, 1.0]]))


def test_campaign_config_validation():
    law = DisorderLaw.constant(1.0)
    with pytest.raises(ValueError):
        CampaignConfig(law, 1, (4, 2), replicas=4)
    with pytest.raises(ValueError):
        CampaignConfig(law, 1, (2, 4), replicas=1)


def test_replica_seed_deterministic_and_distinct():
    seeds = [replica_seed(0, r) for r in range(16)]
    assert seeds == [replica_seed(0, r) for r in range(16)]
    assert len(set(seeds)) == 16


def test_constant_law_campaign_is_exact():
    cfg = CampaignConfig(DisorderLaw.constant(1.5), 2, (2, 4), replicas=3)
    study = convergence_study(cfg)
    for row in study["table"]:
        assert np.allclose(row["mean"], 3.0 * np.eye(2), atol=1e-8)
        assert np.all(row["ci_halfwidth"] <= 1e-8)
    assert study["table"][0]["diff_to_next"] <= 1e-8


def test_convergence_ci_matches_record_spread():
    cfg = CampaignConfig(DisorderLaw.uniform(0.5, 2.0), 1, (2, 4),
                         replicas=8, master_seed=3)
    records = run_campaign(cfg)
    study = convergence_study(cfg, records=records)
    for row in study["table"]:
        block = np.stack([r.entries for r in records if r.N == row["N"]])
        sem = block.std(axis=0, ddof=1) / np.sqrt(block.shape[0])
        assert np.allclose(row["ci_halfwidth"], 1.96 * sem)


def test_concentration_constant_law_degenerate():
    cfg = CampaignConfig(DisorderLaw.constant(1.0), 1, (2, 4), replicas=3)
    study = concentration_study(cfg)
    for row in study["table"]:
        assert row["std"] <= 1e-10
        assert all(f == 0.0 for f in row["tail_frequency"].values())
    assert study["decay_exponent"] is None


def test_concentration_tail_monotone_in_epsilon():
    cfg = CampaignConfig(DisorderLaw.uniform(0.5, 2.0), 1, (2,),
                         replicas=16, master_seed=5)
    study = concentration_study(cfg, epsilons=(0.01, 0.05, 0.2))
    freqs = list(study["table"][0]["tail_frequency"].values())
    assert freqs == sorted(freqs, reverse=True)


def test_campaign_csv_reproducible():
    cfg = CampaignConfig(DisorderLaw.two_point(0.5, 2.0, 0.5), 2, (2, 4),
                         replicas=3, master_seed=11)
    csv1 = records_to_csv(run_campaign(cfg), cfg)
    csv2 = records_to_csv(run_campaign(cfg), cfg)
    assert csv1 == csv2
    header = csv1.splitlines()[0].split(",")
    assert header[:5] == ["seed", "d", "N", "c", "law"]
    assert "lp_2.5" in header
    assert len(csv1.splitlines()) == 1 + 2 * 3


def test_campaign_threads_agree_with_serial():
    law = DisorderLaw.uniform(0.5, 2.0)
    serial = CampaignConfig(law, 1, (2, 4), replicas=4, master_seed=2, threads=1)
    parallel = CampaignConfig(law, 1, (2, 4), replicas=4, master_seed=2, threads=3)
    assert records_to_csv(run_campaign(serial), serial) == \
        records_to_csv(run_campaign(parallel), parallel)


def test_one_d_routes_cross_validate():
    fld = sample_environment(DisorderLaw.uniform(0.5, 2.0), TorusGeometry(1, 4), 7)
    matrix = effective_matrix(fld).entries[0, 0]
    exact = one_d_exact(fld)
    spectral = diffusivity_via_spectrum(fld, [1.0])
    assert abs(matrix - exact) <= 1e-8
    assert abs(spectral - exact) <= 1e-8


def test_hamming_zero_effect_under_constant_law():
    law = DisorderLaw.constant(1.0)
    fld = sample_environment(law, TorusGeometry(2, 2), 0)
    out = hamming_sensitivity(fld, perturb_counts=(1, 4), trials=2, law=law)
    assert all(delta <= 1e-8 for _, delta in out["pairs"])
    assert out["exponent"] is None


def test_hamming_requires_law():
    with pytest.raises(ValueError):
        hamming_sensitivity(TWO_SITE, (1,), trials=1)


def test_hamming_deltas_small_and_recorded():
    law = DisorderLaw.uniform(0.5, 2.0)
    fld = sample_environment(law, TorusGeometry(2, 4), 13)
    out = hamming_sensitivity(fld, perturb_counts=(1, 2), trials=3, law=law, seed=1)
    assert len(out["pairs"]) == 6
    assert set(out["medians"]) == {1, 2}
    # single-bond edits move D only slightly on a 128-bond torus
    assert out["medians"][1] <= 0.05


def test_surface_tension_constant_law():
    fld = sample_environment(DisorderLaw.constant(1.0), TorusGeometry(2, 2), 0)
    sigma, quarter, gap = surface_tension(fld, [1.0, 0.0])
    assert abs(sigma - 0.5) <= 1e-8
    assert abs(quarter - 0.5) <= 1e-8
    assert gap <= 1e-8


def test_surface_tension_two_site():
    sigma, quarter, gap = surface_tension(TWO_SITE, [1.0])
    assert abs(sigma - 2 / 3) <= 1e-10
    assert gap <= 1e-10


def test_surface_tension_quadratic_scaling():
    fld = sample_environment(DisorderLaw.uniform(0.5, 2.0), TorusGeometry(2, 2), 9)
    s1, _, _ = surface_tension(fld, [1.0, 0.5])
    s2, _, _ = surface_tension(fld, [2.0, 1.0])
    assert abs(s2 - 4 * s1) <= 1e-8


def test_surface_tension_budget_exhaustion():
    fld = sample_environment(DisorderLaw.uniform(0.5, 2.0), TorusGeometry(2, 2), 9)
    with pytest.raises(ConvergenceError):
        surface_tension(fld, [1.0, 0.0], max_steps=1)


def test_resolvent_convergence_two_site_value():
    rows = resolvent_convergence(TWO_SITE, [1.0], lam_list=[1.0])
    assert abs(rows[0]["discrepancy"] - 1 / 294) <= 1e-12


def test_resolvent_convergence_monotone_to_zero():
    fld = sample_environment(DisorderLaw.uniform(0.5, 2.0), TorusGeometry(2, 2), 15)
    lams = [1.0, 1e-1, 1e-2, 1e-4, 1e-8]
    rows = resolvent_convergence(fld, [1.0, 0.0], lams)
    discs = [row["discrepancy"] for row in rows]
    assert all(a > b for a, b in zip(discs, discs[1:]))
    assert discs[-1] <= 1e-12


def test_config_hash_stable_and_order_blind():
    h1 = config_hash({"a": 1, "b": [1, 2]})
    h2 = config_hash({"b": [1, 2], "a": 1})
    assert h1 == h2
    assert len(h1) == 8
    assert h1 != config_hash({"a": 2, "b": [1, 2]})


def test_summary_to_json_round_trips():
    import json
    cfg = CampaignConfig(DisorderLaw.constant(1.0), 1, (2,), replicas=2)
    study = convergence_study(cfg)
    doc = summary_to_json(study, cfg, version="0.1.0")
    json.dumps(doc)
    assert doc["version"] == "0.1.0"
    assert len(doc["config_hash"]) == 8
    assert doc["table"][0]["N"] == 2
