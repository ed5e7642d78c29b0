import math
from dataclasses import replace

import numpy as np
import pytest

from srfpll.errors import ConfigError, IngestError
from srfpll.scenario import IngestSpec, ScenarioConfig, run_scenario
from srfpll.scenario.ingest import ingest_csv, loss_windows

DT = 0.00025


def write_rows(path, rows, header="t,za,zb,zc"):
    path.write_text(header + "\n" + "\n".join(",".join(str(v) for v in r) for r in rows) + "\n")
    return path


def balanced_rows(t, omega=50.0, z=1.0):
    return [(tk, *(z * math.cos(omega * tk - s) for s in (0, 2 * math.pi / 3, 4 * math.pi / 3)))
            for tk in t]


def test_three_rows(tmp_path):
    p = write_rows(tmp_path / "a.csv", [(0.0, 1, -0.5, -0.5), (0.001, 0.9, -0.4, -0.5),
                                        (0.002, 0.8, -0.3, -0.5)])
    tr = ingest_csv(p)
    assert len(tr) == 3
    assert tr.dt == pytest.approx(0.001)
    assert tr.valid.all()
    assert np.isnan(tr.theta).all() and np.isnan(tr.omega).all()


def test_renamed_columns_and_truth(tmp_path):
    p = write_rows(tmp_path / "b.csv", [(0.0, 1, 2, 3, 7.0), (0.1, 4, 5, 6, 0.5)],
                   header="time,ia,ib,ic,angle")
    tr = ingest_csv(p, {"t": "time", "za": "ia", "zb": "ib", "zc": "ic", "theta": "angle"})
    assert tr.zc.tolist() == [3.0, 6.0]
    assert tr.theta[0] == pytest.approx(7.0 - 2 * math.pi)


def test_duplicate_timestamp_reports_row(tmp_path):
    p = write_rows(tmp_path / "c.csv", [(0.0, 1, 1, 1), (0.1, 1, 1, 1), (0.1, 1, 1, 1)])
    with pytest.raises(IngestError) as exc:
        ingest_csv(p)
    assert exc.value.row == 4
    assert str(exc.value).startswith("row 4: ")
    assert exc.value.exit_code == 3


def test_non_finite_value_is_an_error(tmp_path):
    p = write_rows(tmp_path / "d.csv", [(0.0, 1, 1, 1), (0.1, "nan", 1, 1)])
    with pytest.raises(IngestError) as exc:
        ingest_csv(p)
    assert exc.value.row == 3


@pytest.mark.parametrize("rows, header", [
    ([(0.0, 1, 1)], "t,za,zb,zc"),
    ([(0.0, 1, 1, "x")], "t,za,zb,zc"),
    ([(0.0, 1, 1, 1)], "t,za,zb"),
])
def test_malformed_input(tmp_path, rows, header):
    with pytest.raises(IngestError):
        ingest_csv(write_rows(tmp_path / "e.csv", rows, header))


def test_missing_file():
    with pytest.raises(IngestError):
        ingest_csv("/nonexistent/file.csv")


def test_gap_becomes_one_loss_window(tmp_path):
    t = np.arange(4000) * DT
    t = np.concatenate([t[t < 0.5], t[t >= 0.55]])
    tr = ingest_csv(write_rows(tmp_path / "g.csv", balanced_rows(t)))
    windows = loss_windows(tr)
    assert len(windows) == 1
    start, count = windows[0]
    assert start == pytest.approx(0.5, abs=DT)
    assert 199 <= count <= 200
    np.testing.assert_allclose(np.diff(tr.t), DT, rtol=1e-6)
    lost = ~tr.valid
    assert np.all(tr.za[lost] == tr.za[np.flatnonzero(lost)[0] - 1])


def test_runner_on_recorded_data(tmp_path):
    t = np.arange(8001) * DT
    p = write_rows(tmp_path / "rec.csv", balanced_rows(t))
    cfg = ScenarioConfig(name="rec", ingest=IngestSpec(str(p)), phase_reference="cosine",
                         windows=((1.5, 2.0),))
    res = run_scenario(cfg)
    assert np.isnan(res.trace.theta_true).all()
    assert res.summaries[0].e_rms < 1e-3
    assert res.omega_channels[:, -1] == pytest.approx([50.0] * 3, rel=0.01)


def test_recorded_dt_must_match(tmp_path):
    t = np.arange(100) * 0.001
    p = write_rows(tmp_path / "slow.csv", balanced_rows(t))
    cfg = ScenarioConfig(name="slow", ingest=IngestSpec(str(p)), feedforward="off")
    with pytest.raises(ConfigError):
        run_scenario(cfg)
    res = run_scenario(replace(cfg, allow_dt_mismatch=True))
    assert len(res.trace) == 100
