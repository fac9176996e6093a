import pytest

from popseq.cli import main


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synth -> split artifacts shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data" / "events.csv"
    assert _run("synth", "--users", 30, "--items", 60, "--events-per-user", 50,
                "--rho", 0.8, "--seed", 7, "-o", data) == 0
    splits = root / "splits"
    assert _run("split", "-i", data, "--val-users", 4, "--seed", 7,
                "-o", splits) == 0
    return root


class TestHappyPath:
    def test_synth_split_eval(self, workspace, capsys):
        report = workspace / "reports" / "pmp.csv"
        code = _run("eval", "-i", workspace / "splits",
                    "--scorer", "personalized-most-popular",
                    "--cutoffs", "5,10", "-o", report)
        assert code == 0
        lines = report.read_text().splitlines()
        assert lines[0] == "user_id,cutoff,ndcg"
        assert len(lines) > 1
        assert "NDCG@10" in capsys.readouterr().out

    def test_sample_filters_catalog(self, workspace):
        out = workspace / "data" / "sampled.csv"
        code = _run("sample", "-i", workspace / "data" / "events.csv",
                    "-n", 20, "--seed", 1, "-o", out)
        assert code == 0
        header, *rows = out.read_text().splitlines()
        items = {line.split(",")[1] for line in rows}
        assert len(items) == 20

    def test_train_writes_checkpoint(self, workspace):
        model_path = workspace / "models" / "tiny.npz"
        code = _run("train", "-i", workspace / "splits",
                    "--model-options",
                    "embed_dim=8,heads=2,l_max=20,max_epochs=2,loss=bce",
                    "-o", model_path)
        assert code == 0
        assert model_path.exists()
        report = workspace / "reports" / "neural.csv"
        assert _run("eval", "-i", workspace / "splits", "--scorer", "neural",
                    "--model", model_path, "--cutoffs", "5,10",
                    "-o", report) == 0

    def test_idempotent_rerun(self, workspace, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert _run("synth", "--users", 10, "--items", 20,
                        "--events-per-user", 15, "--seed", 3, "-o", out) == 0
        assert a.read_bytes() == b.read_bytes()


class TestErrorContracts:
    def test_eval_before_split(self, tmp_path, capsys):
        code = _run("eval", "-i", tmp_path / "nowhere",
                    "--scorer", "most-popular", "-o", tmp_path / "r.csv")
        assert code != 0
        assert "nowhere" in capsys.readouterr().err

    def test_unknown_scorer(self, workspace, capsys):
        code = _run("eval", "-i", workspace / "splits", "--scorer", "oracle",
                    "-o", workspace / "x.csv")
        assert code == 1
        assert "oracle" in capsys.readouterr().err

    def test_bad_model_option(self, workspace, capsys):
        code = _run("train", "-i", workspace / "splits",
                    "--model-options", "embed_dim=8,volume=11",
                    "-o", workspace / "m.npz")
        assert code == 1
        assert "volume" in capsys.readouterr().err

    def test_neural_eval_requires_model(self, workspace, capsys):
        code = _run("eval", "-i", workspace / "splits", "--scorer", "neural",
                    "-o", workspace / "x.csv")
        assert code == 1
        assert "--model" in capsys.readouterr().err


class TestCompare:
    def test_end_to_end_report(self, workspace, capsys):
        outdir = workspace / "cmp"
        code = _run(
            "compare", "-i", workspace / "splits",
            "--scorer", "most-popular",
            "--scorer", "personalized-most-popular",
            "--scorer", "neural:name=sas,loss=bce,embed_dim=8,heads=2,"
                        "l_max=20,max_epochs=2,pps=off",
            "--scorer", "neural:name=sas+pps,loss=bce,embed_dim=8,heads=2,"
                        "l_max=20,max_epochs=2,pps=on",
            "--cutoffs", "5,10", "--seed", 5, "--outdir", outdir)
        assert code == 0
        report_csv = (outdir / "reports" / "report.csv").read_text()
        assert report_csv.startswith("scorer,cutoff,mean_ndcg,comparison")
        # the auto-generated pairing compares the pps twin against its base
        assert "sas+pps" in report_csv
        lines = [l for l in report_csv.splitlines() if l.startswith("sas+pps")]
        assert all(",sas," in l for l in lines)
        assert (outdir / "reports" / "report.md").exists()
        assert (outdir / "models" / "sas+pps.npz").exists()

        def mean_of(name, cutoff):
            for line in report_csv.splitlines()[1:]:
                cells = line.split(",")
                if cells[0] == name and cells[1] == str(cutoff):
                    return float(cells[2])
            raise AssertionError(f"{name}@{cutoff} missing from report")

        # repeat-heavy data: personalized counts dominate global counts,
        # and the popularity prior lifts the barely trained model
        assert mean_of("personalized-most-popular", 10) > mean_of("most-popular", 10)
        assert mean_of("sas+pps", 10) > mean_of("sas", 10)

    def test_run_config_file(self, workspace, capsys):
        cfg = workspace / "run.cfg"
        cfg.write_text(
            "# comparison run\n"
            f"input = {workspace / 'splits'}\n"
            f"outdir = {workspace / 'cfgout'}\n"
            "cutoffs = 5\n"
            "scorer = most-popular\n"
            "scorer = personalized-most-popular\n"
            "pair = personalized-most-popular=most-popular\n")
        assert _run("compare", "--config", cfg) == 0
        report = (workspace / "cfgout" / "reports" / "report.csv").read_text()
        assert ",most-popular," in report
