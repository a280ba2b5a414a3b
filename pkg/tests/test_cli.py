import csv
import io
import json

import pytest
from conftest import PLATINUM_THRESHOLD, PLATINUM_TOTAL_CENTS

from freeladder.cli import EXIT_CALIBRATION, EXIT_LEDGER, EXIT_PARAMETER, main


def kv(text):
    out = {}
    for line in text.splitlines():
        key, _, value = line.partition("  ")
        out[key.strip()] = value.strip()
    return out


def beta_of(field):
    return float(field.split()[0])


class TestCalibrate:
    def test_target_payout(self, capsys):
        assert main(["calibrate", "--start-price", "1.50", "--target-payout", "910000"]) == 0
        out = kv(capsys.readouterr().out)
        assert out["target_gross_cents"] == "130000000"
        assert abs(beta_of(out["beta_paper_simplified"]) * 860_000 - 1) < 0.02
        assert abs(beta_of(out["beta_exact"]) * 860_000 - 1) < 0.10
        assert abs(float(out["buyers_to_free_approx"].replace(",", "")) - 4_300_000) < 0.02 * 4_300_000
        assert abs(int(out["projected_gross_cents"]) - 130_000_000) <= 130_000

    def test_target_gross_identity(self, capsys):
        main(["calibrate", "--target-gross", "1.51"])
        assert beta_of(kv(capsys.readouterr().out)["beta_paper_simplified"]) == pytest.approx(1.0)

    def test_round_trip(self, capsys):
        main(["calibrate", "--start-price", "1.50", "--target-gross", "289966",
              "--mode", "full-integral"])
        out = kv(capsys.readouterr().out)
        assert 1 / beta_of(out["beta_full_integral"]) == pytest.approx(200_000, rel=1e-3)

    def test_unreachable_exit_code(self, capsys):
        code = main(["calibrate", "--target-gross", "1.00"])
        assert code == EXIT_CALIBRATION
        captured = capsys.readouterr()
        assert "beta_exact" in captured.out and "error" in captured.err

    @pytest.mark.parametrize("argv", [
        ["calibrate", "--target-gross", "1.505"],
        ["calibrate", "--target-gross", "-3"],
        ["calibrate"],
        ["schedule", "--gamma", "1.51", "--beta", "0", "--until", "3"],
    ])
    def test_parameter_errors(self, argv, capsys):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == EXIT_PARAMETER

    def test_library_parameter_error(self, capsys):
        assert main(["schedule", "--gamma", "0.005", "--beta", "1", "--until", "3"]) == EXIT_PARAMETER


class TestSchedule:
    def rows(self, argv, capsys):
        assert main(argv) == 0
        return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))

    def test_single_row(self, capsys):
        rows = self.rows(["schedule", "--gamma", "1.51", "--beta", "1/200000", "--until", "1",
                          "--csv"], capsys)
        assert len(rows) == 1 and rows[0]["price_cents"] == "150"

    def test_header_only(self, capsys):
        assert main(["schedule", "--gamma", "1.51", "--beta", "1/200000", "--until", "0",
                     "--csv"]) == 0
        assert capsys.readouterr().out.strip().split(",")[0] == "n"

    def test_threshold_row(self, capsys):
        rows = self.rows(["schedule", "--gamma", "1.51", "--beta", "1/200000", "--until",
                          str(PLATINUM_THRESHOLD + 1), "--every", "250000", "--csv"], capsys)
        flagged = [r for r in rows if r["free_threshold"] == "1"]
        assert len(flagged) == 1
        row = flagged[0]
        assert int(row["n"]) == PLATINUM_THRESHOLD and row["price_cents"] == "0"
        assert int(row["cumulative_exact_cents"]) == PLATINUM_TOTAL_CENTS
        assert abs(int(row["cumulative_exact_cents"]) / 100 - 300_000) <= 0.05 * 300_000

    def test_stable_output(self, capsys, tmp_path):
        argv = ["schedule", "--gamma", "2", "--beta", "0.01", "--until", "700", "--csv"]
        main(argv + ["--out", str(tmp_path / "a.csv")])
        main(argv + ["--out", str(tmp_path / "b.csv")])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_table_mode(self, capsys):
        assert main(["schedule", "--gamma", "1.51", "--beta", "0.5", "--until", "3"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 4


class TestCompareLegacy:
    def test_default_legacy_deal(self, capsys):
        assert main(["compare-legacy"]) == 0
        out = kv(capsys.readouterr().out)
        legacy, ladder = out["artist_cents"].split()
        assert int(legacy) == 91_000_000
        assert abs(int(ladder) - 91_000_000) <= 1e-3 * 91_000_000

    def test_zero_units(self, capsys):
        assert main(["compare-legacy", "--units", "0"]) == 0
        out = kv(capsys.readouterr().out)
        assert out["artist_cents"].split()[0] == "0"

    def test_twelve_percent(self, capsys):
        main(["compare-legacy", "--artist-rate", "12%"])
        assert kv(capsys.readouterr().out)["artist_cents"].split()[0] == "84000000"

    def test_explicit_beta(self, capsys):
        main(["compare-legacy", "--beta", "1/200000"])
        assert kv(capsys.readouterr().out)["gross_cents"].split()[1] == str(PLATINUM_TOTAL_CENTS)


class TestSimulateAndReport:
    def test_simulate(self, tmp_path, capsys):
        scenario = tmp_path / "s.json"
        scenario.write_text(json.dumps({
            "good": {"gamma": 1.51, "alpha": 0.01, "beta": 0.005},
            "demand": {"arrivals_per_step": 10, "wtp": {"kind": "point", "value": 5}, "seed": 1},
            "max_steps": 1000,
        }))
        assert main(["simulate", "--config", str(scenario)]) == 0
        text = capsys.readouterr().out
        lines = text.splitlines()
        assert lines[0].startswith("# generator=")
        summary = dict(l[2:].split("=", 1) for l in lines if l.startswith("# ") and "=" in l
                       and not l.startswith("# generator"))
        assert summary["time_to_free"] == str(-(-1004 // 10))
        out = tmp_path / "t.csv"
        js = tmp_path / "s.out.json"
        assert main(["simulate", "--config", str(scenario), "--out", str(out),
                     "--summary", str(js)]) == 0
        assert json.loads(js.read_text())["sold"] == 1004
        assert out.read_text().splitlines()[1:] == [l for l in lines[1:] if not l.startswith("#")]

    def test_report(self, tmp_path, capsys):
        from freeladder import Ledger
        path = tmp_path / "l.jsonl"
        with Ledger(path, fsync=False) as ledger:
            g = ledger.create_good("A", "band", gamma=1.51, alpha=0.01, beta=1e-5)
            ledger.purchase(g.id, "ann")
        before = path.read_bytes()
        assert main(["report", "--ledger", str(path)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["goods"][0]["totals"]["gross_cents"] == 150
        assert doc["foundation"]["pools_cents"] == {"band": 22}
        assert path.read_bytes() == before

    def test_report_corrupt(self, tmp_path, capsys):
        path = tmp_path / "l.jsonl"
        path.write_text("garbage\n")
        assert main(["report", "--ledger", str(path)]) == EXIT_LEDGER
        assert "line 1" in capsys.readouterr().err
