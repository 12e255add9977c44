"""Three-stage batch pipeline over directories of meter-reading XML files.

Stage 1 (parse) flattens every XML file into one tabular row per reading,
stage 2 (validate) splits rows into valid and invalid by reading-type
code, stage 3 (aggregate) sums values per reading type.  Stages exchange
data through materialized files and run their tools as OS pipelines, so
the tools execute concurrently.  Outputs are written to a temp file and
renamed, leaving no partial files behind on failure.
"""

import argparse
import datetime
import os
import shutil
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

from .core import DataError, UsageError, run_tool
from .generator import GeneratorConfig, generate_corpus

ELEMENT_PATH = "/MeterReadings/MeterReading"

PARSED_FILENAME = "PARSED_FILE"
VALID_FILENAME = "ALL_VALID_READINGS"
INVALID_FILENAME = "ALL_INVALID_READINGS"
AGGREGATE_FILENAME = "MEASURED_VALUES_by_TYPE"

_DIR_KEYS = ("readings_dir", "parsed_dir", "valid_dir", "corrected_dir")


@dataclass
class PipelineConfig:
    readings_dir: str
    parsed_dir: str
    valid_dir: str
    corrected_dir: str
    master_path: str
    batch_dirs: list | None = None

    def validate(self):
        paths = [getattr(self, key) for key in _DIR_KEYS] + [self.master_path]
        if len(set(os.path.abspath(p) for p in paths)) != len(paths):
            raise UsageError("pipeline paths must all be distinct")
        if not os.path.isfile(self.master_path):
            raise UsageError(f"master file not found: {self.master_path}")
        from .core import open_text_input, read_rows
        from .join import load_master

        with open_text_input(self.master_path) as f:
            load_master(read_rows(f))

    def for_batch(self, batch):
        return PipelineConfig(
            readings_dir=os.path.join(self.readings_dir, batch),
            parsed_dir=os.path.join(self.parsed_dir, batch),
            valid_dir=os.path.join(self.valid_dir, batch),
            corrected_dir=os.path.join(self.corrected_dir, batch),
            master_path=self.master_path,
        )

    @property
    def parsed_file(self):
        return os.path.join(self.parsed_dir, PARSED_FILENAME)

    @property
    def valid_file(self):
        return os.path.join(self.valid_dir, VALID_FILENAME)

    @property
    def invalid_file(self):
        return os.path.join(self.valid_dir, INVALID_FILENAME)

    @property
    def aggregate_file(self):
        return os.path.join(self.corrected_dir, AGGREGATE_FILENAME)


def load_config(path):
    """Read a flat key=value config file into a validated PipelineConfig."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc

    missing = [k for k in (*_DIR_KEYS, "master_path") if k not in values]
    if missing:
        raise UsageError(f"config {path} is missing: {', '.join(missing)}")
    batch_dirs = None
    if values.get("batch_dirs"):
        batch_dirs = [b for b in values["batch_dirs"].split(",") if b]
    config = PipelineConfig(
        readings_dir=values["readings_dir"],
        parsed_dir=values["parsed_dir"],
        valid_dir=values["valid_dir"],
        corrected_dir=values["corrected_dir"],
        master_path=values["master_path"],
        batch_dirs=batch_dirs,
    )
    config.validate()
    return config


def _tool(name, *args):
    return [sys.executable, "-m", "meterpipe", name, *args]


def find_xml_files(root):
    """All *.xml files under root, recursively, in sorted path order."""
    found = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(".xml"):
                found.append(os.path.join(dirpath, name))
    return found


class StageError(DataError):
    """A tool in a stage pipeline exited nonzero."""


def _run_stage(commands, out_path, feed_paths=None, stdin_path=None):
    """Run commands as one OS pipeline, writing the last stdout to out_path
    atomically.  ``feed_paths`` are streamed into the first command's stdin."""
    os.makedirs(os.path.dirname(out_path) or ".", exist_ok=True)
    tmp = tempfile.NamedTemporaryFile(
        dir=os.path.dirname(out_path) or ".", prefix=".stage-", delete=False
    )
    procs = []
    try:
        if feed_paths is not None:
            first_stdin = subprocess.PIPE
        elif stdin_path is not None:
            first_stdin = open(stdin_path, "rb")
        else:
            first_stdin = subprocess.DEVNULL
        try:
            for i, argv in enumerate(commands):
                first, last = i == 0, i == len(commands) - 1
                procs.append(
                    subprocess.Popen(
                        argv,
                        stdin=first_stdin if first else procs[-1].stdout,
                        stdout=tmp if last else subprocess.PIPE,
                    )
                )
            for prev in procs[:-1]:
                prev.stdout.close()  # let SIGPIPE propagate between tools
        finally:
            if hasattr(first_stdin, "close"):
                first_stdin.close()

        if feed_paths is not None:
            try:
                for path in feed_paths:
                    with open(path, "rb") as f:
                        shutil.copyfileobj(f, procs[0].stdin, 1024 * 1024)
                procs[0].stdin.close()
            except BrokenPipeError:
                pass  # a downstream failure will surface via exit codes

        failed = None
        for argv, proc in zip(commands, procs):
            if proc.wait() != 0 and failed is None:
                failed = (argv, proc.returncode)
        if failed is not None:
            argv, code = failed
            raise StageError(f"{' '.join(argv[3:])} exited with status {code}")
    except BaseException:
        for proc in procs:
            if proc.poll() is None:
                proc.kill()
                proc.wait()
        tmp.close()
        os.unlink(tmp.name)
        raise
    tmp.close()
    os.replace(tmp.name, out_path)


def stage_parse(config):
    """Flatten every XML file under readings_dir into the parsed file."""
    files = find_xml_files(config.readings_dir)
    if not files:
        raise DataError(f"no *.xml files under {config.readings_dir}")
    commands = [
        _tool("xmldir", ELEMENT_PATH, "-"),
        _tool("self", "NF-1", "NF"),
        _tool("filter-tags"),
        _tool("delr", "2", "MeterID"),
        _tool("group-number"),
        _tool("map", "num=1"),
        _tool("delf", "1"),
        _tool("delr", "3", "0"),
    ]
    _run_stage(commands, config.parsed_file, feed_paths=files)


def stage_validate(config):
    """Split parsed rows into valid (type name added) and invalid files."""
    if not os.path.isfile(config.master_path):
        raise UsageError(f"master file not found: {config.master_path}")
    if not os.path.isfile(config.parsed_file):
        raise UsageError(f"parsed file not found: {config.parsed_file}")
    os.makedirs(config.valid_dir, exist_ok=True)
    reject_tmp = tempfile.NamedTemporaryFile(
        dir=config.valid_dir, prefix=".reject-", delete=False
    )
    reject_tmp.close()
    try:
        _run_stage(
            [
                _tool(
                    "cjoin1",
                    "--reject",
                    reject_tmp.name,
                    "key=2",
                    config.master_path,
                    config.parsed_file,
                )
            ],
            config.valid_file,
        )
    except BaseException:
        os.unlink(reject_tmp.name)
        raise
    os.replace(reject_tmp.name, config.invalid_file)


def stage_aggregate(config):
    """Sum valid reading values per type into the aggregate file."""
    if not os.path.isfile(config.valid_file):
        raise UsageError(f"valid file not found: {config.valid_file}")
    commands = [
        _tool("self", "3", "5", config.valid_file),
        _tool("msort", "key=1"),
        _tool("sm2", "1", "1", "2", "2"),
    ]
    _run_stage(commands, config.aggregate_file)


_STAGES = (
    ("parse", stage_parse),
    ("validate", stage_validate),
    ("aggregate", stage_aggregate),
)


def run_single(config, keep_intermediates=False):
    """Run the three stages over one readings directory; returns stage times."""
    times = {}
    for name, stage in _STAGES:
        started = time.perf_counter()
        stage(config)
        times[name] = time.perf_counter() - started
    if not keep_intermediates:
        os.unlink(config.parsed_file)
    return times


def run_batches(config, keep_intermediates=False):
    """Run every batch sequentially, then re-aggregate the batch totals."""
    if not config.batch_dirs:
        raise UsageError("no batch_dirs configured")
    reports = []
    for batch in config.batch_dirs:
        reports.append((batch, run_single(config.for_batch(batch), keep_intermediates)))
    # Batch aggregates are re-aggregated exactly; exact sums make this
    # equal to aggregating all valid rows in one run.
    commands = [
        _tool("msort", "key=1"),
        _tool("sm2", "1", "1", "2", "2"),
    ]
    batch_files = [config.for_batch(b).aggregate_file for b in config.batch_dirs]
    _run_stage(commands, config.aggregate_file, feed_paths=batch_files)
    return reports


def total_seconds(reports):
    """Total wall clock over per-batch stage timing reports."""
    return sum(sum(times.values()) for _, times in reports)


def format_summary(reports):
    lines = []
    for batch, times in reports:
        stages = " ".join(f"{name}={secs:.3f}s" for name, secs in times.items())
        lines.append(f"batch {batch}: {stages} total={sum(times.values()):.3f}s")
    lines.append(f"total: {total_seconds(reports):.3f}s over {len(reports)} batch(es)")
    return "\n".join(lines)


# --- CLI --------------------------------------------------------------------


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = argparse.ArgumentParser(
        prog="pipeline",
        description="Parse, validate and aggregate meter-reading XML batches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run all stages (and batches, if configured)")
    run_p.add_argument("--config", required=True)
    run_p.add_argument(
        "--keep-intermediates",
        action="store_true",
        help="keep the parsed file after a successful run",
    )

    for name, _ in _STAGES:
        stage_p = sub.add_parser(name, help=f"run only the {name} stage")
        stage_p.add_argument("--config", required=True)

    gen_p = sub.add_parser("gen", help="generate a deterministic XML corpus")
    gen_p.add_argument("--files", type=int, required=True)
    gen_p.add_argument("--meters", type=int, required=True)
    gen_p.add_argument("--invalid-ratio", type=float, default=0.0)
    gen_p.add_argument("--seed", type=int, required=True)
    gen_p.add_argument("--out", required=True)
    gen_p.add_argument("--readings", type=int, default=3)
    gen_p.add_argument("--date", default="2021-01-01")

    args = parser.parse_args(argv)

    def body():
        if args.command == "gen":
            try:
                date = datetime.date.fromisoformat(args.date)
            except ValueError as exc:
                raise UsageError(
                    f"bad --date {args.date!r}: expected YYYY-MM-DD"
                ) from exc
            stats = generate_corpus(
                GeneratorConfig(
                    file_count=args.files,
                    meters=args.meters,
                    seed=args.seed,
                    out_dir=args.out,
                    readings_per_file=args.readings,
                    invalid_ratio=args.invalid_ratio,
                    date=date,
                )
            )
            print(
                f"generated {stats.files} files, {stats.readings} readings "
                f"({stats.invalid_count} invalid) in {args.out}"
            )
            return

        config = load_config(args.config)
        if args.command == "run":
            if config.batch_dirs:
                reports = run_batches(config, args.keep_intermediates)
            else:
                reports = [("-", run_single(config, args.keep_intermediates))]
            print(format_summary(reports))
        else:
            stage = dict(_STAGES)[args.command]
            stage(config)

    return run_tool("pipeline", body)


if __name__ == "__main__":
    sys.exit(main())
