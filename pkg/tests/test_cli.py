import json

import numpy as np
import pytest

from polab.cli import main
from polab.tables import read_table


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One synthetic market generated through the CLI, shared by the module."""
    root = tmp_path_factory.mktemp("cli")
    out = root / "out"
    config = {
        "out_dir": str(out),
        "seed": 1234,
        "synth": {
            "n_stocks": 30,
            "n_days": 4,
            "start_date": "2015-06-10",
            "regimes": [
                {
                    "name": "flow",
                    "buy_rate": 1.1,
                    "sell_rate": 0.9,
                    "mean_fills": 1.4,
                    "coupling": 2.0,
                }
            ],
        },
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))
    assert main(["synth", "--config", str(cfg_path)]) == 0

    # analysis config pointing at the generated files
    analysis = {
        "out_dir": str(out),
        "transactions": str(out / "transactions.csv"),
        "cache": str(out / "cache.plab"),
        "eod_prices": str(out / "eod.csv"),
        "intraday_prices": str(out / "intraday.csv"),
        "pre_crash_end": "2015-06-12",
        "crash_end": "2015-07-07",
        "min_corr_bars": 20,
        "min_fit_samples": 30,
    }
    analysis_path = root / "analysis.json"
    analysis_path.write_text(json.dumps(analysis))
    # emotion series joined on the panel's dates
    emotion_path = root / "emotion.csv"
    lines = ["date,rjf"]
    for i, day in enumerate(("2015-06-10", "2015-06-11", "2015-06-12", "2015-06-15")):
        lines.append(f"{day},{1.0 + 0.1 * i:.3f}")
    emotion_path.write_text("\n".join(lines) + "\n")
    analysis["emotion"] = str(emotion_path)
    analysis_path.write_text(json.dumps(analysis))
    return root, out, analysis_path


def run(analysis_path, *args):
    return main([args[0], "--config", str(analysis_path), *args[1:]])


class TestPipeline:
    def test_ingest_builds_cache_and_report(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "ingest") == 0
        assert (out / "cache.plab").exists()
        meta, cols, rows = read_table(out / "ingest_report.csv")
        stats = dict(rows)
        assert stats["rows_malformed"] == "0"
        assert int(stats["rows_cached"]) == int(stats["rows_total"])

    def test_polarity_tables(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "polarity") == 0
        meta, cols, rows = read_table(out / "polarity_moments.csv")
        assert cols == ["period", "mean", "std", "kurtosis_excess", "n_minutes"]
        overall = rows[0]
        assert overall[0] == "all"
        assert 0.0 < float(overall[1]) < 0.3  # buy-tilted regime
        assert (out / "panel.csv").exists()

    def test_idempotent_rerun(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "polarity") == 0
        first = (out / "polarity_moments.csv").read_bytes()
        panel_first = (out / "panel.csv").read_bytes()
        assert run(cfg, "polarity") == 0
        assert (out / "polarity_moments.csv").read_bytes() == first
        assert (out / "panel.csv").read_bytes() == panel_first

    def test_threads_do_not_change_artifacts(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "polarity") == 0
        single = (out / "panel.csv").read_bytes()
        assert run(cfg, "polarity", "--threads", "2") == 0
        assert (out / "panel.csv").read_bytes() == single

    def test_ratios(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "ratios") == 0
        meta, cols, rows = read_table(out / "direction_ratios.csv")
        all_rows = [r for r in rows if r[1] == "all"]
        assert len(all_rows) == 30
        for r in all_rows:
            total = float(r[2]) + float(r[3]) + float(r[4])
            assert abs(total - 1.0) < 1e-9

    def test_ratios_with_capitalization_join(self, workdir):
        root, out, cfg = workdir
        caps = root / "caps.csv"
        lines = ["id,capitalization"] + [f"{i + 1:06d},{1e9 * (i + 1):.0f}" for i in range(30)]
        caps.write_text("\n".join(lines) + "\n")
        assert run(cfg, "ratios", "--set", f"capitalization={caps}") == 0
        meta, cols, rows = read_table(out / "direction_ratios.csv")
        assert cols[-1] == "capitalization"
        assert any(r[-1] != "NA" for r in rows)

    def test_flips_and_summary(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "flips") == 0
        meta, cols, rows = read_table(out / "flip_daily.csv")
        assert len(rows) > 0
        sf = [float(r[cols.index("standardized_flips")]) for r in rows]
        assert all(0.0 <= v <= 1.0 for v in sf)
        meta, cols, rows = read_table(out / "flip_depth_summary.csv")
        assert len(rows) == 4  # one summary per day

    def test_runlengths_and_fit(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "runlengths") == 0
        meta, cols, rows = read_table(out / "run_lengths.csv")
        assert all(int(r[3]) >= 1 for r in rows)
        assert run(cfg, "fit") == 0
        meta, cols, rows = read_table(out / "tail_fits.csv")
        assert len(rows) == 8  # 4 days x 2 signs
        b_idx = cols.index("burstiness")
        assert all(-1.0 <= float(r[b_idx]) <= 1.0 for r in rows if r[b_idx] != "NA")

    def test_fit_tail_only_burstiness_mode(self, workdir, tmp_path):
        root, out, cfg = workdir
        alt = tmp_path / "alt"
        assert run(cfg, "fit", "--out", str(alt), "--set", "tail_only_burstiness=true") == 0
        meta, cols, rows = read_table(alt / "tail_fits.csv")
        assert meta["burstiness"] == "tail-only"

    def test_market_and_granger(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "market") == 0
        meta, cols, rows = read_table(out / "market_summary.csv")
        stats = dict(rows)
        assert float(stats["n_minutes"]) > 200
        assert run(cfg, "granger") == 0
        meta, cols, rows = read_table(out / "granger_summary.csv")
        assert {r[0] for r in rows} == {"polarity->return", "return->polarity"}
        meta, cols, rows = read_table(out / "daily_polarity_at_index_min.csv")
        assert len(rows) == 4

    def test_kl_chain(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "kl") == 0
        meta, cols, rows = read_table(out / "corr_kl.csv")
        assert len(rows) == 3  # 4 days -> 3 transitions
        assert all(float(r[1]) >= 0.0 for r in rows)
        meta, cols, rows = read_table(out / "corr_hists.csv")
        by_date = {}
        for r in rows:
            by_date.setdefault(r[0], []).append(float(r[3]))
        for probs in by_date.values():
            assert abs(sum(probs) - 1.0) < 1e-9

    def test_impact(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "impact") == 0
        meta, cols, rows = read_table(out / "price_impact.csv")
        all_rows = [r for r in rows if r[0] == "all"]
        assert {r[1] for r in all_rows} == {"negative", "zero", "positive"}
        n_idx = cols.index("n")
        assert sum(int(r[n_idx]) for r in all_rows) > 0

    def test_emotion(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "emotion") == 0
        meta, cols, rows = read_table(out / "emotion_correlation.csv")
        assert rows[0][0] == "overall"
        assert int(rows[0][2]) == 4

    def test_fit_recovers_planted_run_length_exponent(self, tmp_path):
        # a market whose polarity runs are drawn from a known heavy-tail law:
        # the whole pipeline (synth -> runlengths -> fit) must hand it back
        out = tmp_path / "out"
        config = {
            "out_dir": str(out),
            "seed": 404,
            "min_fit_samples": 50,
            "synth": {
                "n_stocks": 60,
                "n_days": 1,
                "start_date": "2015-05-04",
                "regimes": [
                    {"name": "planted-tail", "run_length_alpha": 3.5, "run_length_xmin": 1}
                ],
            },
        }
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(config))
        assert main(["synth", "--config", str(cfg)]) == 0
        analysis = {
            "out_dir": str(out),
            "transactions": str(out / "transactions.csv"),
        }
        cfg.write_text(json.dumps(analysis))
        assert main(["runlengths", "--config", str(cfg)]) == 0
        assert main(["fit", "--config", str(cfg)]) == 0
        meta, cols, rows = read_table(out / "tail_fits.csv")
        assert len(rows) == 2  # one day, both signs
        a_idx = cols.index("alpha")
        for r in rows:
            assert r[a_idx] != "NA"
            assert 3.4 <= float(r[a_idx]) <= 3.6

    def test_verify_subcommand(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "verify", "--scenarios", "3") == 0
        meta, cols, rows = read_table(out / "verify_report.csv")
        assert dict(rows)["failures"] == "0"

    def test_config_hash_in_headers(self, workdir):
        root, out, cfg = workdir
        assert run(cfg, "polarity") == 0
        meta, _, _ = read_table(out / "polarity_moments.csv")
        assert "config=" in meta["_banner"]


class TestErrorMapping:
    def test_unknown_config_key_is_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"no_such_key": 1}')
        assert main(["polarity", "--config", str(cfg)]) == 2
        assert "category=config" in capsys.readouterr().err

    def test_missing_config_file_is_io_error(self, tmp_path, capsys):
        assert main(["polarity", "--config", str(tmp_path / "nope.json")]) == 3
        assert "category=io" in capsys.readouterr().err

    def test_missing_inputs_is_config_error(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"out_dir": str(tmp_path)}))
        assert main(["polarity", "--config", str(cfg)]) == 2

    def test_nonexistent_input_path_is_io_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(
            json.dumps({"transactions": str(tmp_path / "nope.csv"), "out_dir": str(tmp_path)})
        )
        assert main(["polarity", "--config", str(cfg)]) == 3
        assert "category=io" in capsys.readouterr().err

    def test_malformed_transactions_is_data_error(self, tmp_path, capsys):
        tx = tmp_path / "tx.csv"
        tx.write_text(
            "trade_date,stock_id,time,price,volume,buy_serial,sell_serial\n"
            "garbage\n"
        )
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"transactions": str(tx), "out_dir": str(tmp_path)}))
        assert main(["polarity", "--config", str(cfg)]) == 4
        assert "category=data" in capsys.readouterr().err

    def test_degenerate_market_is_numeric_error(self, workdir, tmp_path, capsys):
        root, out, cfg_path = workdir
        # an index whose only close is on the final day has no prior close
        # anywhere, so no usable return minutes exist
        eod = tmp_path / "eod.csv"
        eod.write_text("date,id,close\n2015-06-15,SZSC,10000.0\n")
        raw = json.loads(cfg_path.read_text())
        raw["eod_prices"] = str(eod)
        raw["out_dir"] = str(tmp_path)
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(raw))
        assert main(["market", "--config", str(cfg)]) == 5
        assert "category=numeric" in capsys.readouterr().err

    def test_set_override_changes_behavior(self, workdir, tmp_path):
        root, out, cfg = workdir
        alt = tmp_path / "alt"
        assert run(cfg, "polarity", "--out", str(alt), "--set", "serial_scope=day") == 0
        meta, _, _ = read_table(alt / "polarity_moments.csv")
        assert meta["serial_scope"] == "day"

    def test_bad_set_syntax(self, workdir, capsys):
        root, out, cfg = workdir
        assert main(["polarity", "--config", str(cfg), "--set", "oops"]) == 2
