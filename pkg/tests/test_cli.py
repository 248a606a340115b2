import json
import socket
import threading
import time

import numpy as np
import pytest

from spheretrunc.cli import main
from spheretrunc.truncation import truncate_spectrum


def run_cli(capsys, *argv):
    main(list(argv))
    return capsys.readouterr().out


class TestTruncateCommand:
    def test_json_output(self, capsys):
        out = run_cli(capsys, "truncate", "--lam", "0.5,1.0,1.5", "--rho", "1.0")
        data = json.loads(out)
        want = truncate_spectrum([0.5, 1.0, 1.5], 1.0).mu
        np.testing.assert_allclose(data["mu"], want, atol=1e-15)
        assert data["config"]["rho"] == 1.0
        assert data["lambda"] == [0.5, 1.0, 1.5]

    def test_out_file(self, tmp_path, capsys):
        target = tmp_path / "mu.json"
        run_cli(capsys, "truncate", "--lam", "1 2", "--rho", "2.0",
                "--out", str(target))
        assert json.loads(target.read_text())["config"]["epsilon"] == 1e-14


class TestReconstructCommand:
    def test_round_trip(self, capsys):
        mu = truncate_spectrum([0.5, 1.0, 1.5], 1.0).mu
        out = run_cli(capsys, "reconstruct", "--mu",
                      ",".join(repr(float(x)) for x in mu), "--rho", "1.0",
                      "--scheme", "gjor")
        data = json.loads(out)
        assert data["status"] == "converged"
        np.testing.assert_allclose(data["lambda"], [0.5, 1.0, 1.5], rtol=1e-5)
        assert data["config"]["scheme"] == "gjor"


class TestModesCommand:
    def test_csv(self, capsys):
        out = run_cli(capsys, "modes", "--v", "3", "--n-samples", "3000",
                      "--seed", "3")
        lines = out.strip().splitlines()
        assert lines[0] == "v,p,k,mode,r,s,N,seed"
        assert len(lines) == 4


class TestStudyAndFit:
    def test_study_then_fit(self, tmp_path, capsys):
        csv_path = tmp_path / "study.csv"
        out = run_cli(capsys, "study", "--v", "3", "--n-samples", "4",
                      "--rho", "0.3", "--rho", "0.8", "--scheme", "gjor",
                      "--seed", "7", "--threads", "1", "--out", str(csv_path))
        meta = json.loads(out)
        assert meta["rows"] == 8
        assert meta["config"]["rng"]["algorithm"] == "philox2x64"
        header = csv_path.read_text().splitlines()[0]
        assert header == "v,p,rho,beta,scheme,stream_index,status,n_it,n_cond,seed"

        fit_out = run_cli(capsys, "fit", str(csv_path), "--window", "1.0")
        fit = json.loads(fit_out)
        assert len(fit["scaling"]) == 1
        assert fit["scaling"][0]["v"] == 3
        assert fit["scaling"][0]["b"] > 0

    def test_study_requires_rho_source(self, capsys):
        with pytest.raises(SystemExit):
            main(["study", "--v", "3", "--n-samples", "4", "--out", "x.csv"])


@pytest.fixture(scope="module")
def live_server():
    import uvicorn

    from spheretrunc.service import app

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    for _ in range(100):
        if server.started:
            break
        time.sleep(0.05)
    else:
        raise RuntimeError("service did not start")
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestThinClient:
    def test_truncate_via_server(self, live_server, capsys):
        out = run_cli(capsys, "truncate", "--lam", "0.5,1.0,1.5", "--rho", "1.0",
                      "--server", live_server)
        data = json.loads(out)
        want = truncate_spectrum([0.5, 1.0, 1.5], 1.0).mu
        np.testing.assert_allclose(data["mu"], want, atol=1e-12)

    def test_reconstruct_via_server(self, live_server, capsys):
        mu = truncate_spectrum([0.7, 1.3], 1.0).mu
        out = run_cli(capsys, "reconstruct", "--mu", f"{mu[0]},{mu[1]}",
                      "--rho", "1.0", "--server", live_server)
        data = json.loads(out)
        assert data["status"] == "converged"
        np.testing.assert_allclose(data["lambda"], [0.7, 1.3], rtol=1e-5)

    def test_modes_via_server(self, live_server, capsys):
        out = run_cli(capsys, "modes", "--v", "2", "--n-samples", "2000",
                      "--server", live_server)
        assert out.splitlines()[0] == "v,p,k,mode,r,s,N,seed"
