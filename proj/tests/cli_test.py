"""End-to-end checks of panelrect_cli: exit codes, file formats, schemas.

usage: cli_test.py <panelrect_cli> <schema dir>
"""
import json
import math
import os
import struct
import subprocess
import sys
import tempfile
import unittest
import zlib

import jsonschema

CLI = None
SCHEMAS = None


def run(*args, check=True):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}\n{proc.stdout}\n{proc.stderr}")
    return proc


def schema(name):
    with open(os.path.join(SCHEMAS, f"{name}.schema.json")) as f:
        return json.load(f)


def load(path):
    with open(path) as f:
        return json.load(f)


def write_gray_png(path, width, height, pixels):
    """pixels: flat list of 0..255, row-major."""
    raw = b"".join(b"\x00" + bytes(pixels[y * width:(y + 1) * width]) for y in range(height))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data))

    with open(path, "wb") as f:
        f.write(b"\x89PNG\r\n\x1a\n")
        f.write(chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)))
        f.write(chunk(b"IDAT", zlib.compress(raw)))
        f.write(chunk(b"IEND", b""))


def residual(corner_file, fx=320.0, fy=320.0, ox=320.0, oy=240.0):
    """Two-norm of the corner-angle cosines of back-projected corners, computed by hand."""
    total = 0.0
    for button in corner_file["buttons"]:
        pts = [((x - ox) / fx, (y - oy) / fy, 1.0) for x, y in button["corners"]]
        h = [pts[1][i] - pts[0][i] for i in range(3)]
        v = [pts[3][i] - pts[0][i] for i in range(3)]
        dot = sum(a * b for a, b in zip(h, v))
        total += (dot / (math.sqrt(sum(a * a for a in h)) * math.sqrt(sum(b * b for b in v)))) ** 2
    return math.sqrt(total)


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory(prefix="panelrect_cli_")
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.dir, *parts)

    def synth(self, name, *extra):
        run("synth", "--out", self.path(name), *extra)
        return self.path(name)

    # synth

    def test_synth_default_bundle(self):
        out = self.synth("b")
        self.assertEqual(sorted(os.listdir(out)), ["corners.json", "image.png", "mask.png", "pose.json"])
        corners = load(os.path.join(out, "corners.json"))
        jsonschema.validate(corners, schema("corners"))
        self.assertEqual(len(corners["buttons"]), 2)

    def test_synth_records_requested_angles(self):
        out = self.synth("b", "--pose", "10,-7.5,3")
        self.assertEqual(load(os.path.join(out, "pose.json"))["theta_deg"], [10, -7.5, 3])

    def test_synth_grid(self):
        out = self.synth("g", "--grid", "3x2")
        self.assertEqual(len(load(os.path.join(out, "corners.json"))["buttons"]), 6)

    def test_synth_rejects_bad_pose(self):
        self.assertNotEqual(run("synth", "--out", self.path("x"), "--pose", "1,2", check=False).returncode, 0)
        self.assertNotEqual(run("synth", "--out", self.path("x"), "--pose", "70,0,0", check=False).returncode, 0)

    # detect-corners

    def test_detect_matches_fixture(self):
        out = self.synth("b", "--pose", "8,-12,5")
        det = self.path("det.json")
        proc = run("detect-corners", os.path.join(out, "mask.png"), "-o", det, "--overlay", self.path("ov.png"))
        self.assertEqual(proc.returncode, 0)
        self.assertTrue(os.path.exists(self.path("ov.png")))
        found, truth = load(det), load(os.path.join(out, "corners.json"))
        jsonschema.validate(found, schema("corners"))
        self.assertEqual(len(found["buttons"]), len(truth["buttons"]))
        for fb, tb in zip(found["buttons"], truth["buttons"]):
            self.assertEqual(fb["class_id"], tb["class_id"])
            for (fx, fy), (tx, ty) in zip(fb["corners"], tb["corners"]):
                self.assertLessEqual(math.hypot(fx - tx, fy - ty), 2.0)

    def test_detect_empty_mask_fails(self):
        mask = self.path("empty.png")
        write_gray_png(mask, 64, 48, [0] * (64 * 48))
        proc = run("detect-corners", mask, "-o", self.path("c.json"), check=False)
        self.assertEqual(proc.returncode, 1)
        self.assertFalse(os.path.exists(self.path("c.json")))

    def test_detect_partial_failure(self):
        w, h = 640, 480
        px = [0] * (w * h)
        for label, y0 in ((1, 60), (2, 200)):
            for y in range(y0, y0 + 80):
                for x in range(280, 361):
                    px[y * w + x] = label
        # The third region is a triangle: no four edges to assemble.
        for y in range(340, 420):
            for x in range(280, 280 + (y - 340) + 1):
                px[y * w + x] = 3
        mask = self.path("partial.png")
        write_gray_png(mask, w, h, px)
        det = self.path("det.json")
        proc = run("detect-corners", mask, "-o", det, check=False)
        self.assertEqual(proc.returncode, 2, proc.stderr)
        self.assertIn("region 3", proc.stderr)
        self.assertEqual([b["class_id"] for b in load(det)["buttons"]], [1, 2])

    # rectify

    def test_rectify_recovers_bundle_pose(self):
        out = self.synth("b", "--pose", "6,-4.5,2")
        report = self.path("r.json")
        run("rectify", os.path.join(out, "image.png"), "--corners", os.path.join(out, "corners.json"),
            "-o", self.path("rect.png"), "--report", report, "--workers", "1",
            "--rectified-corners", self.path("rc.json"), "--overlay", self.path("ov.png"))
        rep = load(report)
        jsonschema.validate(rep, schema("report"))
        self.assertEqual(rep["best_angles_deg"], load(os.path.join(out, "pose.json"))["theta_deg"])
        self.assertEqual(rep["hypotheses_evaluated"], 161 ** 3)
        self.assertLessEqual(rep["residual_after"], 1e-6)
        self.assertGreater(rep["residual_before"], rep["residual_after"])
        self.assertLessEqual(residual(load(self.path("rc.json"))), 1e-6)
        for f in ("rect.png", "ov.png"):
            self.assertTrue(os.path.exists(self.path(f)))

    def test_rectify_identity_leaves_image_unchanged(self):
        out = self.synth("b")
        report, rect = self.path("r.json"), self.path("rect.png")
        run("rectify", os.path.join(out, "image.png"), "--mask", os.path.join(out, "mask.png"),
            "-o", rect, "--report", report, "--coarse-to-fine")
        rep = load(report)
        jsonschema.validate(rep, schema("report"))
        self.assertEqual(rep["best_angles_deg"], [0, 0, 0])
        self.assertEqual(rep["coarse_hypotheses"] + rep["fine_hypotheses"], rep["hypotheses_evaluated"])
        # Detected corners sit a fraction of a pixel off the reference, so the
        # exact-identity check uses the bundle's own corners.
        run("rectify", os.path.join(out, "image.png"), "--corners", os.path.join(out, "corners.json"),
            "-o", rect, "--coarse-to-fine")
        with open(rect, "rb") as a, open(os.path.join(out, "image.png"), "rb") as b:
            self.assertEqual(a.read(), b.read())

    def test_rectify_intrinsics_precedence(self):
        out = self.synth("b", "--intrinsics", "300,310,322,238")
        small = ("--alpha", "-2", "--beta", "2", "--gamma", "1")
        image = os.path.join(out, "image.png")

        run("rectify", image, "--corners", os.path.join(out, "corners.json"), "-o", self.path("a.png"),
            "--report", self.path("file.json"), *small)
        self.assertEqual(load(self.path("file.json"))["intrinsics"], {"fx": 300, "fy": 310, "ox": 322, "oy": 238})

        run("rectify", image, "--corners", os.path.join(out, "corners.json"), "-o", self.path("a.png"),
            "--report", self.path("flag.json"), "--intrinsics", "400,400,300,200", *small)
        self.assertEqual(load(self.path("flag.json"))["intrinsics"], {"fx": 400, "fy": 400, "ox": 300, "oy": 200})

        run("rectify", image, "--mask", os.path.join(out, "mask.png"), "-o", self.path("a.png"),
            "--report", self.path("default.json"), *small)
        self.assertEqual(load(self.path("default.json"))["intrinsics"], {"fx": 320, "fy": 320, "ox": 320, "oy": 240})

    def test_rectify_dump_and_determinism(self):
        out = self.synth("b", "--pose", "1,-1,0")
        args = ["rectify", os.path.join(out, "image.png"), "--corners", os.path.join(out, "corners.json"),
                "-o", self.path("a.png"), "--alpha", "-2", "--beta", "2", "--gamma", "1"]
        run(*args, "--report", self.path("r1.json"), "--dump-scores", self.path("dump.txt"), "--workers", "1")
        run(*args, "--report", self.path("r2.json"), "--workers", "3", "--streaming")
        with open(self.path("dump.txt")) as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[0].startswith("#"))
        self.assertEqual(len(lines) - 1, 5 ** 3)
        r1, r2 = load(self.path("r1.json")), load(self.path("r2.json"))
        r1.pop("elapsed_seconds")
        r2.pop("elapsed_seconds")
        self.assertEqual(r1, r2)
        self.assertEqual(r1["best_angles_deg"], [1, -1, 0])

    def test_rectify_usage_errors(self):
        out = self.synth("b")
        image = os.path.join(out, "image.png")
        self.assertNotEqual(run("rectify", image, "-o", self.path("a.png"), check=False).returncode, 0)
        self.assertNotEqual(run("rectify", image, "--corners", self.path("missing.json"), "-o", self.path("a.png"),
                                check=False).returncode, 0)
        self.assertNotEqual(run("rectify", image, "--corners", os.path.join(out, "corners.json"),
                                "-o", self.path("a.png"), "--gamma", "0", check=False).returncode, 0)
        self.assertNotEqual(run(check=False).returncode, 0)

    # evaluate

    def test_evaluate_reference_is_zero(self):
        out = self.synth("b")
        line = run("evaluate", os.path.join(out, "corners.json")).stdout.strip().splitlines()
        self.assertEqual(len(line), 1)
        self.assertLessEqual(float(line[0].split("\t")[1]), 1e-12)

    def test_evaluate_matches_hand_computation(self):
        out = self.synth("b", "--pose", "12,-9,4")
        path = os.path.join(out, "corners.json")
        value = float(run("evaluate", path).stdout.split("\t")[1])
        expected = residual(load(path))
        self.assertGreater(value, 0.01)
        self.assertAlmostEqual(value, expected, delta=1e-12)

    def test_evaluate_batch_average(self):
        poses = ["0,0,0", "5,0,0", "0,-8,3", "10,10,-10", "-6,4,2"]
        files = [os.path.join(self.synth(f"b{i}", "--pose", p), "corners.json") for i, p in enumerate(poses)]
        lines = run("evaluate", *files).stdout.strip().splitlines()
        self.assertEqual(len(lines), 6)
        values = [float(l.split("\t")[1]) for l in lines[:5]]
        for f, v, l in zip(files, values, lines):
            self.assertTrue(l.startswith(f))
            self.assertAlmostEqual(v, residual(load(f)), delta=1e-12)
        self.assertTrue(lines[5].startswith("average\t"))
        self.assertAlmostEqual(float(lines[5].split("\t")[1]), sum(values) / 5, delta=1e-15)

    def test_evaluate_rejects_malformed_file(self):
        bad = self.path("bad.json")
        with open(bad, "w") as f:
            json.dump({"schema_version": 1, "buttons": [{"class_id": 1, "corners": [[0, 0], [0, 10], [10, 10], [10, 0]]}]}, f)
        proc = run("evaluate", bad, check=False)
        self.assertEqual(proc.returncode, 1)
        self.assertIn("canonical", proc.stderr)


if __name__ == "__main__":
    CLI, SCHEMAS = sys.argv[1], sys.argv[2]
    unittest.main(argv=sys.argv[:1], verbosity=2)
