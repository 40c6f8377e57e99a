import json

import numpy as np
import pytest
from click.testing import CliRunner

from lmc.analysis import synthetic_trajectory
from lmc.cli import main
from lmc.stream import parse_header
from lmc.types import ElementType


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def step_files(tmp_path):
    shards = list(synthetic_trajectory(20_000, 6, seed=5))
    paths = []
    for i, s in enumerate(shards):
        p = tmp_path / f"step{i}.bin"
        p.write_bytes(s.data)
        paths.append(p)
    return paths


def _run(runner, args, **kw):
    return runner.invoke(main, args, catch_exceptions=False, **kw)


class TestCompressDecompress:
    def test_round_trip(self, runner, tmp_path, step_files):
        out = tmp_path / "a.lmc"
        back = tmp_path / "a.out"
        r = _run(runner, ["compress", "--dtype", "bf16", "--threads", "2",
                          str(step_files[0]), str(out)])
        assert r.exit_code == 0
        assert "ratio=" in r.output and "MiB/s=" in r.output
        r = _run(runner, ["decompress", str(out), str(back)])
        assert r.exit_code == 0
        assert back.read_bytes() == step_files[0].read_bytes()

    def test_alignment_error_exits_2(self, runner, tmp_path):
        odd = tmp_path / "odd.bin"
        odd.write_bytes(bytes(1001))
        r = runner.invoke(main, ["compress", "--dtype", "fp32", str(odd), str(tmp_path / "x.lmc")])
        assert r.exit_code == 2
        assert "not a multiple" in r.output

    def test_no_bytegroup_clears_flag(self, runner, tmp_path, step_files):
        out = tmp_path / "nbg.lmc"
        r = _run(runner, ["compress", "--dtype", "bf16", "--no-bytegroup",
                          str(step_files[0]), str(out)])
        assert r.exit_code == 0
        header = parse_header(out.read_bytes())
        assert not header.byte_grouped

    def test_delta_flag_compresses_xor(self, runner, tmp_path, step_files):
        out = tmp_path / "d.lmc"
        r = _run(runner, ["compress", "--dtype", "bf16", "--delta",
                          str(step_files[0]), str(step_files[1]), str(out)])
        assert r.exit_code == 0
        assert parse_header(out.read_bytes()).delta_applied

    def test_truncated_stream_exits_3(self, runner, tmp_path, step_files):
        out = tmp_path / "t.lmc"
        _run(runner, ["compress", "--dtype", "bf16", str(step_files[0]), str(out)])
        out.write_bytes(out.read_bytes()[:-5])
        r = runner.invoke(main, ["decompress", str(out), str(tmp_path / "t.out")])
        assert r.exit_code == 3

    def test_wrong_magic_exits_3(self, runner, tmp_path):
        bogus = tmp_path / "bogus.lmc"
        bogus.write_bytes(b"NOPE" + bytes(64))
        r = runner.invoke(main, ["decompress", str(bogus), str(tmp_path / "o")])
        assert r.exit_code == 3
        assert "magic" in r.output

    def test_lmc_threads_env(self, runner, tmp_path, step_files, monkeypatch):
        monkeypatch.setenv("LMC_THREADS", "3")
        out = tmp_path / "env.lmc"
        r = _run(runner, ["compress", "--dtype", "bf16", str(step_files[0]), str(out)])
        assert r.exit_code == 0
        assert parse_header(out.read_bytes()).segment_count == 3

    def test_rerun_is_idempotent(self, runner, tmp_path, step_files):
        out = tmp_path / "i.lmc"
        _run(runner, ["compress", "--dtype", "bf16", "--threads", "2", str(step_files[0]), str(out)])
        first = out.read_bytes()
        _run(runner, ["compress", "--dtype", "bf16", "--threads", "2", str(step_files[0]), str(out)])
        assert out.read_bytes() == first


class TestCheckpointCommands:
    def _shard_file(self, tmp_path, i, data):
        d = tmp_path / f"in{i}"
        d.mkdir(exist_ok=True)
        p = d / "weights.bin"
        p.write_bytes(data)
        return p

    def test_chain_add_restore(self, runner, tmp_path, step_files):
        chain = tmp_path / "chain"
        for i, f in enumerate(step_files):
            p = self._shard_file(tmp_path, i, f.read_bytes())
            r = _run(runner, ["checkpoint", "add", "--dtype", "bf16", str(chain), str(p)])
            assert r.exit_code == 0, r.output
        outdir = tmp_path / "restored"
        r = _run(runner, ["checkpoint", "restore", str(chain), "5", str(outdir)])
        assert r.exit_code == 0
        assert (outdir / "weights.bin").read_bytes() == step_files[5].read_bytes()

    def test_shape_change_exits_4(self, runner, tmp_path, step_files):
        chain = tmp_path / "chain"
        p0 = self._shard_file(tmp_path, 0, step_files[0].read_bytes())
        _run(runner, ["checkpoint", "add", "--dtype", "bf16", str(chain), str(p0)])
        p1 = self._shard_file(tmp_path, 1, step_files[1].read_bytes()[:-4])
        r = runner.invoke(main, ["checkpoint", "add", "--dtype", "bf16", str(chain), str(p1)])
        assert r.exit_code == 4

    def test_missing_stream_exits_5(self, runner, tmp_path, step_files):
        chain = tmp_path / "chain"
        for i in range(3):
            p = self._shard_file(tmp_path, i, step_files[i].read_bytes())
            _run(runner, ["checkpoint", "add", "--dtype", "bf16", str(chain), str(p)])
        victim = next(chain.glob("step000001_*.lmc"))
        victim.unlink()
        r = runner.invoke(main, ["checkpoint", "restore", str(chain), "2", str(tmp_path / "o")])
        assert r.exit_code == 5

    def test_jsonl_manifest_input(self, runner, tmp_path, step_files):
        chain = tmp_path / "chain"
        for i in range(2):
            spec = tmp_path / f"ckpt{i}.jsonl"
            rows = [
                {"name": "w", "dtype": "bf16", "path": step_files[i].name},
            ]
            spec.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
            r = _run(runner, ["checkpoint", "add", str(chain), str(spec)])
            assert r.exit_code == 0, r.output
        outdir = tmp_path / "r"
        r = _run(runner, ["checkpoint", "restore", str(chain), "1", str(outdir)])
        assert r.exit_code == 0
        assert (outdir / "w").read_bytes() == step_files[1].read_bytes()


class TestAnalyzeCommands:
    def test_bits_csv_has_16_rows(self, runner, step_files):
        r = _run(runner, ["analyze", "bits", "--dtype", "bf16", str(step_files[0])])
        assert r.exit_code == 0
        lines = r.output.strip().split("\n")
        assert lines[0] == "step,bit,ratio"
        assert len(lines) == 17

    def test_flips_csv(self, runner, step_files):
        r = _run(runner, ["analyze", "flips", "--dtype", "bf16",
                          str(step_files[0]), str(step_files[1])])
        assert r.exit_code == 0
        assert len(r.output.strip().split("\n")) == 17

    def test_ratio_series_on_raw_directory(self, runner, tmp_path, step_files):
        r = _run(runner, ["analyze", "ratio-series", "--codec", "bg-lmc",
                          "--dtype", "bf16", str(step_files[0].parent)])
        assert r.exit_code == 0
        lines = r.output.strip().split("\n")
        assert lines[0] == "step,codec,ratio,encode_s,decode_s"
        assert len(lines) == len(step_files)  # header + (steps - 1) deltas

    def test_ratio_series_on_chain_dir(self, runner, tmp_path, step_files):
        chain = tmp_path / "chain"
        for i in range(3):
            d = tmp_path / f"in{i}"
            d.mkdir()
            p = d / "w.bin"
            p.write_bytes(step_files[i].read_bytes())
            _run(runner, ["checkpoint", "add", "--dtype", "bf16", str(chain), str(p)])
        r = _run(runner, ["analyze", "ratio-series", "--codec", "lmc", str(chain)])
        assert r.exit_code == 0
        assert len(r.output.strip().split("\n")) == 3

    def test_unknown_codec_exits_6(self, runner, step_files):
        r = runner.invoke(main, ["analyze", "ratio-series", "--codec", "zpaq",
                                 "--dtype", "bf16", str(step_files[0].parent)])
        assert r.exit_code == 6

    def test_entropy_csv(self, runner, step_files):
        r = _run(runner, ["analyze", "entropy", str(step_files[0])])
        assert r.exit_code == 0
        lines = r.output.strip().split("\n")
        assert lines[0] == "path,bytes,block_size,ideal_ratio"
        path, nbytes, block, ratio = lines[1].split(",")
        assert int(nbytes) == 40_000
        assert 0.0 <= float(ratio) <= 1.0


class TestBenchCommand:
    def test_scale_csv_schema(self, runner, tmp_path, rng):
        corpus = tmp_path / "corpus.bin"
        corpus.write_bytes(rng.integers(0, 256, 1 << 20, dtype=np.uint8).tobytes())
        r = _run(runner, ["bench", "scale", "--threads", "1,2", str(corpus)])
        assert r.exit_code == 0
        lines = r.output.strip().split("\n")
        assert lines[0] == "threads,compress_mib_s,decompress_mib_s,ratio"
        assert len(lines) == 3

    def test_synthetic_corpus_with_seed(self, runner):
        r = _run(runner, ["bench", "scale", "--threads", "1", "--synthetic-mib", "1",
                          "--seed", "9"])
        assert r.exit_code == 0
        assert len(r.output.strip().split("\n")) == 2

    def test_bad_threads_exits_6(self, runner, tmp_path):
        f = tmp_path / "c.bin"
        f.write_bytes(bytes(4096))
        r = runner.invoke(main, ["bench", "scale", "--threads", "0,nope", str(f)])
        assert r.exit_code == 6


class TestJsonOutput:
    def test_bits_json_when_output_has_json_suffix(self, runner, tmp_path, step_files):
        out = tmp_path / "bits.json"
        r = _run(runner, ["analyze", "bits", "--dtype", "bf16",
                          str(step_files[0]), "-o", str(out)])
        assert r.exit_code == 0
        rows = json.loads(out.read_text())
        assert len(rows) == 16
        assert set(rows[0]) == {"step", "bit", "ratio"}

    def test_ratio_series_json(self, runner, tmp_path, step_files):
        out = tmp_path / "ratios.json"
        r = _run(runner, ["analyze", "ratio-series", "--codec", "lmc",
                          "--dtype", "bf16", str(step_files[0].parent),
                          "-o", str(out)])
        assert r.exit_code == 0
        rows = json.loads(out.read_text())
        assert len(rows) == len(step_files) - 1
        assert set(rows[0]) == {"step", "codec", "ratio", "encode_s", "decode_s"}

    def test_csv_written_for_other_suffixes(self, runner, tmp_path, step_files):
        out = tmp_path / "bits.csv"
        r = _run(runner, ["analyze", "bits", "--dtype", "bf16",
                          str(step_files[0]), "-o", str(out)])
        assert r.exit_code == 0
        assert out.read_text().startswith("step,bit,ratio\n")
