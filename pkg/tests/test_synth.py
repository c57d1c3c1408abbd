from datetime import date

import numpy as np
import pandas as pd
import pytest

from diurnal.activity import circular_convolve, gaussian_kernel
from diurnal.ingest import localize
from diurnal.ratios import ratio_series
from diurnal.synth import (DEFAULT_PROPENSITY, Peak, PopulationSpec, Surge, SynthSpec, default_spec,
                           synth_generate, synth_spec_from_config)

SPAN = (date(2020, 1, 1), date(2020, 6, 30))


def test_deterministic_for_seed():
    spec = default_spec(20, (50, 60), span=SPAN)
    a, b = synth_generate(spec, 3), synth_generate(spec, 3)
    pd.testing.assert_frame_equal(a.table.frame, b.table.frame)
    c = synth_generate(spec, 4)
    assert not a.table.frame["ts"].equals(c.table.frame["ts"])
    assert a.labels.value_counts().to_dict() == {"evening": 20, "intermediate": 20, "morning": 20}


@pytest.mark.parametrize("name, peak_bin", [("morning", 37), ("intermediate", 48), ("evening", 89)])
def test_planted_peak_is_recovered_in_local_time(name, peak_bin):
    res = synth_generate(default_spec(40, (300, 300), span=SPAN), 1)
    t = localize(res.table, "europe-central")
    users = res.labels.index[res.labels == name]
    bins = t.frame.loc[t.frame["user"].isin(users), "bin"]
    hist = circular_convolve(np.bincount(bins, minlength=96).astype(float), gaussian_kernel())
    assert abs((int(np.argmax(hist)) - peak_bin + 48) % 96 - 48) <= 2


def test_box_surge_raises_night_ratio():
    surge = Surge(2.5, 4.25, factor=4.0, shape="box")
    pop = PopulationSpec("flat", 200, (200, 200), (Peak(0.0, 0.0),), surge=surge)
    res = synth_generate(SynthSpec((pop,), span=SPAN), 2)
    t = localize(res.table, "europe-central")
    r = ratio_series(t, res.labels.index)
    top = int(np.argmax(np.where(r.mask, -1, r.values)))
    assert 10 <= top <= 16
    assert np.nanmean(r.values[10:17]) > 1.5 * np.nanmean(r.values[40:80])


def test_surge_profiles():
    box = Surge(shape="box").profile()
    assert box[10] == 2.0 and box[16] == 2.0 and box[17] == 1.0 and box[9] == 1.0
    vm = Surge(shape="vonmises").profile()
    assert int(np.argmax(vm)) in (13, 14) and vm.min() >= 1.0
    assert Surge().centre == pytest.approx(3.375)
    with pytest.raises(ValueError):
        Surge(shape="ramp").profile()


def test_lockdown_activity_multiplier():
    spec = default_spec(10, (400, 400), lockdown_activity=3.0, span=SPAN)
    t = synth_generate(spec, 0).table
    d = t.frame["ts"].dt.date
    inside = ((d >= date(2020, 3, 9)) & (d <= date(2020, 5, 18))).mean()
    days_in = 71 / 182
    assert inside > 2 * days_in / (1 + days_in)


def test_validation_errors():
    with pytest.raises(ValueError):
        SynthSpec((PopulationSpec("a", 1, (5, 1), (Peak(1, 1),)),)).validate()
    with pytest.raises(ValueError):
        SynthSpec((PopulationSpec("a", 1, (1, 5), (Peak(1, -1),)),)).validate()
    bad = dict(DEFAULT_PROPENSITY, Science=0.5)
    with pytest.raises(ValueError):
        SynthSpec((PopulationSpec("a", 1, (1, 5), (Peak(1, 1),), bad),)).validate()


def test_spec_from_config():
    s = synth_spec_from_config({"users_per_population": 5, "surge": {"shape": "vonmises"}}, SPAN)
    assert len(s.populations) == 3 and s.populations[0].surge.shape == "vonmises"
    full = synth_spec_from_config({"populations": [
        {"name": "x", "size": 3, "posts_per_user": [2, 4], "peaks": [[10, 2, 1.0]]}]}, SPAN)
    assert full.populations[0].peaks == (Peak(10, 2, 1.0),) and full.span == SPAN
