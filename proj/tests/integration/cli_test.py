"""End-to-end checks of the crosatfl command-line tool."""

import argparse
import csv
import filecmp
import json
import shutil
import subprocess
import sys
import unittest
from pathlib import Path

import jsonschema

ARGS = None


def run(*args, expect=0):
    proc = subprocess.run([ARGS.cli, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        raise AssertionError(
            f"{' '.join(map(str, args))}: exit {proc.returncode}, wanted {expect}\n"
            f"stdout:\n{proc.stdout}\nstderr:\n{proc.stderr}")
    return proc


def load(path):
    with open(path) as f:
        return json.load(f)


def validate(doc, name):
    schema = load(Path(ARGS.repo) / "schemas" / f"{name}.schema.json")
    jsonschema.validate(doc, schema)


def same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(same_tree(Path(a) / d, Path(b) / d) for d in cmp.common_dirs)


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.work = Path(ARGS.work)
        shutil.rmtree(cls.work, ignore_errors=True)
        cls.work.mkdir(parents=True)
        cls.scen = Path(ARGS.repo) / "scenarios"

    def path(self, *parts):
        return self.work.joinpath(self._testMethodName, *parts)

    def write_json(self, name, doc):
        p = self.path(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(doc))
        return p

    def test_simulate_counts_and_determinism(self):
        for method, gs in (("crosatfl", 18), ("fedsyn", 3200)):
            a, b = self.path(method, "a"), self.path(method, "b")
            run("simulate", self.scen / "default.json", "--method", method, "--out-dir", a)
            run("simulate", self.scen / "default.json", "--method", method, "--out-dir", b)
            self.assertTrue(same_tree(a, b), f"{method} artifacts differ between runs")
            ledger = load(a / "ledger.json")
            validate(ledger, "ledger")
            validate(load(a / "scenario.json"), "scenario")
            self.assertEqual(ledger["gs_count"], gs)
            if method == "fedsyn":
                self.assertEqual(ledger["intra_lisl_count"], 0)
                self.assertEqual(ledger["inter_lisl_count"], 0)
            for name in ("events.csv", "metrics.csv", "skips.csv", "final_model.bin"):
                self.assertTrue((a / name).is_file(), name)
            with open(a / "metrics.csv") as f:
                self.assertEqual(len(list(csv.DictReader(f))), 40)

    def test_seed_flag_changes_output(self):
        run("simulate", self.scen / "default.json", "--out-dir", self.path("s1"))
        run("simulate", self.scen / "default.json", "--seed", 2, "--out-dir", self.path("s2"))
        self.assertEqual(load(self.path("s2", "ledger.json"))["seed"], 2)
        self.assertNotEqual((self.path("s1", "events.csv")).read_bytes(), (self.path("s2", "events.csv")).read_bytes())

    def test_event_log_recomputes_ledger(self):
        out = self.path("sim")
        run("simulate", self.scen / "default.json", "--out-dir", out)
        ledger = load(out / "ledger.json")
        with open(out / "events.csv") as f:
            events = list(csv.DictReader(f))
        energy = sum(float(e["energy_j"]) for e in events if float(e["bits"]) > 0)
        total = ledger["totals"]["transmission_energy_j"]
        self.assertAlmostEqual(energy / total, 1.0, delta=1e-9)
        counts = {}
        for e in events:
            counts[e["action"]] = counts.get(e["action"], 0) + 1
        self.assertEqual(counts.get("intra_lisl", 0), ledger["intra_lisl_count"])
        self.assertEqual(counts.get("gs_downlink", 0) + counts.get("gs_uplink", 0), ledger["gs_count"])
        self.assertEqual(counts.get("skip", 0), ledger["skips"])

    def test_invalid_input_exit_1(self):
        bad = self.write_json("bad.json", {"session": {"edge_rounds": 5, "bogus": 1}})
        proc = run("simulate", bad, "--out-dir", self.path("out"), expect=1)
        self.assertIn("bogus", proc.stderr)
        run("simulate", self.scen / "default.json", "--method", "magic", expect=1)
        run("simulate", self.path("missing.json"), expect=1)
        broken = self.path("broken.json")
        broken.write_text("{not json")
        run("simulate", broken, expect=1)
        run("cluster", self.scen / "profiles_default.json", "--policy", "nonsense", "--out", self.path("p.json"), expect=1)

    def test_cluster_greedy_default_profiles(self):
        out = self.path("partition.json")
        run("cluster", self.scen / "profiles_default.json", "--out", out)
        doc = load(out)
        validate(doc, "partition")
        self.assertEqual(doc["status"], "feasible")
        self.assertEqual(doc["cluster_count"], 9)
        profiles = load(self.scen / "profiles_default.json")["profiles"]
        limits = {"CPU": 4, "GPU": 10}
        seen = []
        for c in doc["clusters"]:
            members = c["members"]
            seen += members
            self.assertIn(c["master"], members)
            self.assertGreaterEqual(len(members), 2)
            self.assertEqual(len({profiles[i]["hardware"] for i in members}), 1)
            master = profiles[c["master"]]
            capacity = max(0, min(master["fan_out"] - 1, limits[master["hardware"]]))
            self.assertLessEqual(len(members) - 1, capacity)
        self.assertEqual(sorted(seen), list(range(len(profiles))))

    def test_cluster_infeasible_exit_2(self):
        profiles = [{"id": i, "n_samples": 100, "hardware": "GPU", "alpha_flops_per_s": 1e12, "fan_out": 1,
                     "p_avg_w": 20.0} for i in range(5)]
        doc = self.write_json("zero.json", {"profiles": profiles, "starmask": {"m_min": 2}})
        out = self.path("report.json")
        proc = run("cluster", doc, "--out", out, expect=2)
        self.assertIn("K_min", proc.stderr)
        report = load(out)
        validate(report, "partition")
        self.assertEqual(report["status"], "infeasible")

    def test_train_policy_zero_episodes(self):
        a, b = self.path("a.txt"), self.path("b.txt")
        run("train-policy", self.scen / "train_instances.json", "--out", a, "--episodes", 0)
        run("train-policy", self.scen / "train_instances.json", "--out", b, "--episodes", 0)
        self.assertIn("episodes 0\n", a.read_text())
        self.assertEqual(a.read_bytes(), b.read_bytes())
        with open(str(a) + ".trace.csv") as f:
            self.assertEqual(len(list(csv.DictReader(f))), 0)

    def test_train_policy_trace_and_divergence(self):
        out = self.path("p.txt")
        trace = self.path("trace.csv")
        run("train-policy", self.scen / "train_instances.json", "--out", out, "--episodes", 120, "--trace", trace)
        with open(trace) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 120)
        self.assertEqual([int(r["episode"]) for r in rows], list(range(1, 121)))
        run("train-policy", self.scen / "train_instances.json", "--out", self.path("d.txt"), "--episodes", 20,
            "--learning-rate", 1e300, expect=3)

    def test_trained_policy_paired_against_greedy(self):
        pol = self.path("policy.txt")
        run("train-policy", self.scen / "train_instances.json", "--out", pol)
        out = self.path("paired.json")
        run("cluster", self.scen / "cluster_family.json", "--policy", f"trained:{pol}", "--paired", 20, "--out", out)
        doc = load(out)
        validate(doc, "partition")
        self.assertEqual(doc["paired"]["instances"], 20)
        self.assertGreaterEqual(doc["paired"]["fraction"], 0.5)

    def test_compare_table(self):
        out = self.path("cmp")
        proc = run("compare", self.scen / "default.json", "--methods", "crosatfl,fedsyn", "--out", out)
        doc = load(out / "comparison.json")
        validate(doc, "comparison")
        rows = ["Intra-cluster LISLs (No.)", "Inter-cluster LISLs (No.)", "GS Communication (No.)",
                "Transmission Energy Cost (kJ)", "Training Energy Cost (kJ)", "Transmission Time (Hours)",
                "Waiting Time (Hours)"]
        self.assertEqual(doc["rows"], rows)
        for m in ("crosatfl", "fedsyn"):
            self.assertEqual(set(doc["table"][m]), set(rows))
        self.assertAlmostEqual(doc["ratios"]["gs_count"], 3200 / 18, places=12)
        self.assertLess(doc["details"]["crosatfl"]["waiting_time_s"], doc["details"]["fedsyn"]["waiting_time_s"])
        self.assertTrue(3.0 <= doc["ratios"]["transmission_energy"] <= 12.0)
        with open(out / "comparison.csv") as f:
            table = list(csv.reader(f))
        self.assertEqual(table[0], ["row", "crosatfl", "fedsyn"])
        self.assertEqual([r[0] for r in table[1:]], rows)
        self.assertEqual(proc.stdout, (out / "comparison.csv").read_text())

    def test_scenario_round_trip(self):
        first = self.path("first")
        run("simulate", self.scen / "default.json", "--out-dir", first)
        echoed = first / "scenario.json"
        second = self.path("second")
        run("simulate", echoed, "--out-dir", second)
        self.assertEqual(echoed.read_bytes(), (second / "scenario.json").read_bytes())
        self.assertEqual((first / "ledger.json").read_bytes(), (second / "ledger.json").read_bytes())


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--repo", required=True)
    parser.add_argument("--work", required=True)
    ARGS, rest = parser.parse_known_args()
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)
