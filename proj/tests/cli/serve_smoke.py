#!/usr/bin/env python3
# Starts `xmcts serve` on a free port, drives one session over HTTP, then stops it with SIGTERM.
import json
import re
import signal
import subprocess
import sys
import urllib.error
import urllib.request


def call(port, method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}", data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=30) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def main():
    binary, scenario_dir = sys.argv[1], sys.argv[2]
    proc = subprocess.Popen([binary, "serve", "--port", "0", "--scenario-dir", scenario_dir],
                            stdout=subprocess.PIPE, text=True)
    try:
        line = proc.stdout.readline()
        m = re.match(r"listening host=\S+ port=(\d+)", line)
        assert m, f"unexpected banner: {line!r}"
        port = int(m.group(1))

        status, body = call(port, "GET", "/scenarios")
        assert status == 200 and "fixture" in body["scenarios"], body
        status, body = call(port, "POST", "/sessions", {"scenario_name": "fixture"})
        assert status == 201, body
        sid = body["session"]
        status, body = call(port, "POST", f"/sessions/{sid}/plan", {"iterations": 50})
        assert status == 200 and body["recommended_vehicle"] is not None, body
        query = {"qtype": "factual", "bindings": {"passenger": 1, "action": "dropoff", "direction": "late"}}
        status, body = call(port, "POST", f"/sessions/{sid}/queries", {"queries": [query]})
        assert status == 200 and body["explanations"][0]["text"], body
        status, body = call(port, "POST", f"/sessions/{sid}/apply")
        assert status == 200 and body["next_epoch"] == 1, body
        status, body = call(port, "GET", "/sessions/nope/state")
        assert status == 404 and body["code"] == "not-found", body
    finally:
        proc.send_signal(signal.SIGTERM)
        out, _ = proc.communicate(timeout=30)
    assert proc.returncode == 0, proc.returncode
    assert "stopped" in out, out
    print("serve smoke ok")


if __name__ == "__main__":
    main()
