"""End-to-end analysis: configuration, orchestration and report emission."""
from __future__ import annotations

import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from datetime import date
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from . import ingest
from ._parallel import set_default_workers
from .activity import bin_labels, cluster_activity_curve, gaussian_circular_smooth
from .clustering import ClusterModel, fit_clusters
from .ingest import (DEFAULT_CENTROID, DEFAULT_SPAN, DISINFORMATIVE, KNOWN_CATEGORIES, N_BINS,
                     ContentCategory, IngestError, PostTable)
from .ratios import (category_ratio_table, day_night_bins, month_bin_ratios, period_comparison,
                     ratio_series, smooth_ratio, susceptibility_windows, user_disinfo_ratios)
from .rhythm import align_by_reference, extract_extrema, heightened_window
from .solar import average_boundaries, monthly_boundaries, monthly_table, months_in_span
from .spectral import smooth_spectral
from .stats import DegenerateError, chi_square, dip_test, mann_whitney_u, spearman

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_INTERNAL = 0, 2, 3, 4
# fields that do not influence results and so stay out of the provenance hash
_UNHASHED = ("threads", "output_dir", "formats")

DISINFO_SETS = {
    "disinformative": tuple(c for c in KNOWN_CATEGORIES if c in DISINFORMATIVE),
    "Political": (ContentCategory.POLITICAL,),
    "FakeOrHoax": (ContentCategory.FAKE_OR_HOAX,),
    "ConspiracyJunkScience": (ContentCategory.CONSPIRACY_JUNK_SCIENCE,),
}


class StageError(RuntimeError):
    """An error raised inside a pipeline stage, tagged with the stage name."""

    def __init__(self, stage: str, error: BaseException):
        super().__init__(f"[{stage}] {type(error).__name__}: {error}")
        self.stage = stage
        self.error = error

    @property
    def exit_code(self) -> int:
        if isinstance(self.error, (IngestError, FileNotFoundError, ConfigError)):
            return EXIT_INPUT
        if isinstance(self.error, DegenerateDataError):
            return EXIT_DEGENERATE
        return EXIT_INTERNAL


class ConfigError(ValueError):
    pass


class DegenerateDataError(RuntimeError):
    """Degenerate-data warning promoted to an error in strict mode."""


def _as_date(v) -> date:
    return v if isinstance(v, date) else date.fromisoformat(str(v))


@dataclass(frozen=True)
class RunConfig:
    posts: str | None = None
    category_map: str | None = None
    bot_list: str | None = None
    coordinates: str | None = None
    span: tuple[date, date] = DEFAULT_SPAN
    tz_rule: str = "europe-central"
    centroid: tuple[float, float] = DEFAULT_CENTROID
    reject_threshold: float = 0.05
    window_minutes: float = 90.0
    threshold: int = 240
    k_range: tuple[int, int] = (2, 10)
    k: int | None = None
    coi_rule: str = "min"
    m_range: tuple[int, int] = (1, 4)
    m_activity: int | None = None
    m_ratio: int | None = None
    wake_hours: float = 16.0
    margin: float = 1.0
    lockdown: tuple[date, date] = (date(2020, 3, 9), date(2020, 5, 18))
    bootstrap_n: int = 2000
    seed: int = 0
    threads: int = 1
    strict: bool = False
    output_dir: str = "report"
    formats: tuple[str, ...] = ("csv", "json")
    synth: Mapping[str, Any] | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "span", tuple(_as_date(v) for v in self.span))
        set_(self, "lockdown", tuple(_as_date(v) for v in self.lockdown))
        set_(self, "k_range", tuple(int(v) for v in self.k_range))
        set_(self, "m_range", tuple(int(v) for v in self.m_range))
        set_(self, "centroid", tuple(float(v) for v in self.centroid))
        set_(self, "formats", tuple(self.formats))
        if self.span[1] < self.span[0]:
            raise ConfigError("span end precedes start")
        if self.k_range[0] < 2 or self.k_range[1] < self.k_range[0]:
            raise ConfigError(f"bad k_range {self.k_range}")
        if not 0 <= self.margin:
            raise ConfigError("margin must be non-negative")
        unknown = set(self.formats) - {"csv", "json", "svg"}
        if unknown:
            raise ConfigError(f"unknown formats {sorted(unknown)}")

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [x.isoformat() if isinstance(x, date) else x for x in v]
            elif isinstance(v, Mapping):
                v = json.loads(json.dumps(v, default=str, sort_keys=True))
            out[f.name] = v
        return out

    @property
    def config_hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        flat: dict[str, Any] = {}
        for key, value in data.items():
            key = key.replace("-", "_")
            if isinstance(value, Mapping) and key != "synth":
                for sub, v in value.items():  # sections are only grouping
                    flat[sub.replace("-", "_")] = v
            else:
                flat[key] = value
        unknown = set(flat) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**flat)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_toml(cls, path, **overrides) -> "RunConfig":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)


@dataclass
class ReportBundle:
    config: RunConfig
    tables: dict[str, pd.DataFrame] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    model: ClusterModel | None = None

    @property
    def config_hash(self) -> str:
        return self.config.config_hash


# -- stages ------------------------------------------------------------------

def _stage(name):
    def wrap(func):
        def run(*args, **kwargs):
            log.info("stage %s", name)
            try:
                return func(*args, **kwargs)
            except StageError:
                raise
            except Exception as exc:  # noqa: BLE001 - tagged and re-raised
                raise StageError(name, exc) from exc
        run.__name__ = func.__name__
        return run
    return wrap


@_stage("ingest")
def _ingest(config: RunConfig) -> tuple[PostTable, pd.Series | None]:
    labels = None
    if config.posts:
        if not Path(config.posts).exists():
            raise FileNotFoundError(config.posts)
        table = ingest.parse_posts(config.posts, span=config.span, reject_threshold=config.reject_threshold)
        cmap = ingest.read_category_map(config.category_map) if config.category_map else {}
        bots = ingest.read_bot_list(config.bot_list) if config.bot_list else set()
        table = ingest.map_and_filter(table, cmap, bots)
    elif config.synth is not None:
        from .synth import synth_spec_from_config, synth_generate
        result = synth_generate(synth_spec_from_config(config.synth, config.span), config.seed)
        table, labels = ingest.map_and_filter(result.table), result.labels
    else:
        raise ConfigError("no input: set `posts` or a [synth] section")
    table = ingest.localize(table, config.tz_rule)
    coords = ingest.read_user_coordinates(config.coordinates) if config.coordinates else None
    return ingest.attach_coordinates(table, coords, config.centroid), labels


@_stage("clustering")
def _cluster(table: PostTable, config: RunConfig) -> ClusterModel:
    return fit_clusters(table, config.threshold, config.k_range, config.k, config.window_minutes,
                        coi_rule=config.coi_rule)


def _user_location(table: PostTable) -> tuple[float, float]:
    per_user = table.frame.groupby("user", sort=True)[["lat", "lon"]].mean()
    return float(per_user["lat"].mean()), float(per_user["lon"].mean())


def run_pipeline(config: RunConfig, table: PostTable | None = None,
                 labels: pd.Series | None = None) -> ReportBundle:
    """Run every stage and collect the result tables.

    A pre-built (localized) ``table`` skips the ingest stage.
    """
    set_default_workers(config.threads)
    bundle = ReportBundle(config)
    if table is None:
        table, labels = _ingest(config)
    elif not table.localized:
        table = ingest.localize(table, config.tz_rule)
    if len(table) == 0:
        raise StageError("ingest", IngestError("no posts left after ingestion"))

    model = _cluster(table, config)
    bundle.model = model
    bundle.warnings.extend(model.warnings)
    groups = model.groups()
    if config.strict and bundle.warnings:
        raise StageError("clustering", DegenerateDataError("; ".join(bundle.warnings)))

    _clustering_tables(bundle, table, model, labels)
    curves = _activity_stage(bundle, table, groups)
    ratios = _ratio_stage(bundle, table, groups)
    _stats_stage(bundle, table, groups, curves, ratios)
    _solar_and_periods(bundle, table, groups, curves, ratios)
    counters = dict(table.counters)
    bundle.tables["ingest_counters"] = pd.DataFrame(
        sorted(counters.items()), columns=["counter", "value"])
    bundle.summary.update(dict(
        n_posts=len(table), n_users=len(table.users), k=model.k,
        groups={g: len(m) for g, m in groups.items()},
        votes=model.votes, warnings=list(bundle.warnings),
    ))
    if config.strict and bundle.warnings:
        raise StageError("report", DegenerateDataError("; ".join(bundle.warnings)))
    return bundle


def _clustering_tables(bundle, table, model, labels):
    rows = []
    for group, members in model.groups().items():
        for u in members:
            rows.append(dict(user=u, group=group, cluster=model.assignments.get(u, -1)))
    assign = pd.DataFrame(rows, columns=["user", "group", "cluster"]).sort_values("user", kind="mergesort")
    if labels is not None:
        assign["planted"] = assign["user"].map(labels)
    bundle.tables["assignments"] = assign.reset_index(drop=True)
    idx = model.index_scores.reset_index() if len(model.index_scores) else pd.DataFrame()
    bundle.tables["cluster_indices"] = idx
    if labels is not None and model.k >= 1 and model.frequent:
        from .clustering import adjusted_rand_index
        users = model.frequent
        bundle.summary["ari_vs_planted"] = adjusted_rand_index(
            [model.assignments[u] for u in users], [labels[u] for u in users])


@_stage("activity")
def _activity_stage(bundle, table, groups):
    cfg = bundle.config
    curve_rows, window_rows, extrema_rows, msel = [], [], [], []
    out = {}
    for group, members in groups.items():
        raw = cluster_activity_curve(table, members)
        smooth = gaussian_circular_smooth(raw, cfg.window_minutes)
        spectral, m, dist = smooth_spectral(raw, cfg.m_activity, m_range=cfg.m_range)
        wake = heightened_window(spectral, cfg.wake_hours)
        if wake.degenerate:
            bundle.warnings.append(f"{group}: flat activity, wake window degenerate")
        aligned = align_by_reference(spectral, wake.onset)
        out[group] = dict(raw=raw, smooth=smooth, spectral=spectral, m=m, wake=wake)
        curve_rows.append(pd.DataFrame({
            "group": group, "bin": np.arange(N_BINS), "bin_start": bin_labels(),
            "raw": raw.values, "smoothed": smooth.values, "spectral": spectral.values,
            "aligned_spectral": aligned.values,
        }))
        window_rows.append(dict(group=group, m=m, onset=wake.onset, end=wake.end, length=wake.length,
                                window_sum=wake.window_sum, degenerate=wake.degenerate))
        for e in extract_extrema(spectral):
            extrema_rows.append(dict(group=group, series="activity", kind=e.kind, hour=e.hour, value=e.value))
        if dist is not None:
            d = dist.copy()
            d.insert(0, "group", group)
            msel.append(d.reset_index())
    bundle.tables["activity_curves"] = pd.concat(curve_rows, ignore_index=True)
    bundle.tables["wake_windows"] = pd.DataFrame(window_rows)
    bundle.tables["extrema"] = pd.DataFrame(extrema_rows)
    if msel:
        bundle.tables["activity_m_selection"] = pd.concat(msel, ignore_index=True).astype({"m": str})
    return out


@_stage("ratios")
def _ratio_stage(bundle, table, groups):
    cfg = bundle.config
    rows, cat_rows, out = [], [], {}
    for group, members in groups.items():
        rs = ratio_series(table, members, label=group)
        if rs.mask.all():
            bundle.warnings.append(f"{group}: no classifiable posts, ratios skipped")
            continue
        smooth, m, _ = smooth_ratio(rs, cfg.m_ratio, m_range=cfg.m_range)
        sus = np.zeros(N_BINS, dtype=bool)
        sus[susceptibility_windows(smooth)] = True
        heat = month_bin_ratios(table, members)
        per_set = {name: smooth_ratio(ratio_series(table, members, cats, group), cfg.m_ratio,
                                      m_range=cfg.m_range)[0]
                   for name, cats in DISINFO_SETS.items() if name != "disinformative"}
        per_set_raw = {name: ratio_series(table, members, cats, group)
                       for name, cats in DISINFO_SETS.items() if name != "disinformative"}
        out[group] = dict(raw=rs, spectral=smooth, m=m, heatmap=heat, sets=per_set, sets_raw=per_set_raw,
                          heatmaps={name: month_bin_ratios(table, members, cats)
                                    for name, cats in DISINFO_SETS.items() if name != "disinformative"})
        rows.append(pd.DataFrame({
            "group": group, "bin": np.arange(N_BINS), "bin_start": bin_labels(),
            "raw": rs.values, "masked": rs.mask, "spectral": smooth.values, "susceptible": sus,
            "m": m,
        }))
        for e in extract_extrema(smooth.values):
            bundle.tables.setdefault("_ratio_extrema", [])
            bundle.tables["_ratio_extrema"].append(
                dict(group=group, series="ratio", kind=e.kind, hour=e.hour, value=e.value))
        ct = category_ratio_table(table, members)
        ct.insert(0, "bin", np.arange(N_BINS))
        ct.insert(0, "group", group)
        cat_rows.append(ct)
        bundle.tables[f"heatmap_{group}"] = heat.rename_axis("month").reset_index()
    bundle.tables["ratio_curves"] = pd.concat(rows, ignore_index=True) if rows else pd.DataFrame()
    bundle.tables["category_ratios"] = pd.concat(cat_rows, ignore_index=True) if cat_rows else pd.DataFrame()
    extra = bundle.tables.pop("_ratio_extrema", [])
    if extra:
        bundle.tables["extrema"] = pd.concat([bundle.tables["extrema"], pd.DataFrame(extra)], ignore_index=True)
    return out


def _mwu_row(**kw):
    res = kw.pop("result")
    return dict(kw, U=res.statistic, p_value=res.p_value, method=res.method, n_x=res.n[0], n_y=res.n[1])


@_stage("stats")
def _stats_stage(bundle, table, groups, curves, ratios):
    cfg = bundle.config
    names = [g for g in groups if g in ratios]
    # pairwise: is the row group's smoothed ratio distribution smaller than the column's?
    rows = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            res = mann_whitney_u(ratios[a]["spectral"].values, ratios[b]["spectral"].values, "less")
            rows.append(_mwu_row(row=a, column=b, alternative="less", result=res))
    bundle.tables["cluster_ratio_mwu"] = pd.DataFrame(rows)

    # user total posts vs user disinformative share
    rows = []
    everyone = []
    for g in names + ["total"]:
        members = [u for m in groups.values() for u in m] if g == "total" else groups[g]
        ur = user_disinfo_ratios(table, members).dropna(subset=["ratio"])
        rows.append(_spearman_row(dict(group=g), ur["total_posts"], ur["ratio"]))
    bundle.tables["posts_ratio_spearman"] = pd.DataFrame(rows)

    # diurnal activity vs ratio, coarse (raw) and smooth (spectral)
    rows = []
    for level in ("coarse", "smooth"):
        for set_name in DISINFO_SETS:
            pooled_a, pooled_r = [], []
            for g in names:
                act = curves[g]["raw" if level == "coarse" else "spectral"].values
                if set_name == "disinformative":
                    rs = ratios[g]["raw"] if level == "coarse" else ratios[g]["spectral"]
                else:
                    rs = ratios[g]["sets_raw"][set_name] if level == "coarse" else ratios[g]["sets"][set_name]
                ok = ~rs.mask & np.isfinite(rs.values)
                pooled_a.append(act[ok])
                pooled_r.append(rs.values[ok])
                rows.append(_spearman_row(dict(level=level, category=set_name, group=g), act[ok], rs.values[ok]))
            if pooled_a:
                rows.append(_spearman_row(dict(level=level, category=set_name, group="total"),
                                          np.concatenate(pooled_a), np.concatenate(pooled_r)))
    bundle.tables["activity_ratio_spearman"] = pd.DataFrame(rows)

    # dip test of the raw and smoothed activity curves
    rows = []
    for g, c in curves.items():
        for level, key in (("coarse", "raw"), ("smooth", "spectral")):
            res = dip_test(c[key].values, cfg.bootstrap_n, cfg.seed)
            rows.append(dict(group=g, level=level, dip=res.statistic, p_value=res.p_value,
                             onset=c["wake"].onset, end=c["wake"].end))
    bundle.tables["dip_tests"] = pd.DataFrame(rows)

    # content type x group association
    frame = table.frame
    known = [c.value for c in KNOWN_CATEGORIES]
    counts = []
    for g in names:
        sub = frame.loc[frame["user"].isin(set(groups[g])), "category"]
        counts.append([int((sub == c).sum()) for c in known])
    chi_rows = []
    counts = np.asarray(counts)
    if len(names) >= 2:
        keep = counts.sum(axis=0) > 0
        chi_rows.append(_chi_row("category_by_group", counts[:, keep]))
    bundle.tables["chi_square"] = pd.DataFrame(chi_rows)


def _spearman_row(base, x, y):
    try:
        res = spearman(np.asarray(x, float), np.asarray(y, float))
        return dict(base, rho=res.statistic, p_value=res.p_value, n=res.n[0])
    except (DegenerateError, ValueError) as exc:
        return dict(base, rho=np.nan, p_value=np.nan, n=len(x), note=str(exc))


def _chi_row(name, counts):
    try:
        res = chi_square(counts)
        return dict(test=name, chi2=res.statistic, df=res.df, p_value=res.p_value, shape="x".join(map(str, res.n)))
    except (DegenerateError, ValueError) as exc:
        return dict(test=name, chi2=np.nan, df=np.nan, p_value=np.nan, note=str(exc))


def _split_rows(values: np.ndarray, bins_by_row: list[tuple[np.ndarray, np.ndarray]]):
    day, night = [], []
    for row, (d, n) in zip(values, bins_by_row):
        day.append(row[d])
        night.append(row[n])
    day, night = np.concatenate(day), np.concatenate(night)
    return day[np.isfinite(day)], night[np.isfinite(night)]


@_stage("solar")
def _solar_and_periods(bundle, table, groups, curves, ratios):
    cfg = bundle.config
    lat, lon = _user_location(table)
    months = months_in_span(table.span)
    sun = monthly_table(lat, lon, table.span, cfg.tz_rule)
    sun["sunrise_rounded"] = [monthly_boundaries(lat, lon, d, cfg.tz_rule)[0] if f == "normal" else np.nan
                              for d, f in zip(months, sun["flag"])]
    sun["sunset_rounded"] = [monthly_boundaries(lat, lon, d, cfg.tz_rule)[1] if f == "normal" else np.nan
                             for d, f in zip(months, sun["flag"])]
    bundle.tables["sun_times"] = sun
    clock = average_boundaries(lat, lon, table.span, cfg.tz_rule)
    bundle.summary["clock_boundaries"] = list(clock)
    bundle.summary["location"] = [lat, lon]

    rows = []
    clock_bins = day_night_bins(clock, cfg.margin)
    monthly_bins = [day_night_bins((r, s), cfg.margin)
                    for r, s in zip(sun["sunrise_rounded"], sun["sunset_rounded"])]
    for g in groups:
        if g not in ratios:
            continue
        wake = curves[g]["wake"]
        wake_bins = day_night_bins((wake.onset, wake.onset + wake.length), cfg.margin)
        for set_name in DISINFO_SETS:
            heat = ratios[g]["heatmap"] if set_name == "disinformative" else ratios[g]["heatmaps"][set_name]
            values = heat.to_numpy()
            raw = (ratios[g]["raw"] if set_name == "disinformative" else ratios[g]["sets_raw"][set_name]).values
            samples = [("month_bin", partition, values, bins) for partition, bins in
                       (("clock", [clock_bins] * len(values)), ("sun", monthly_bins),
                        ("waking", [wake_bins] * len(values)))]
            samples += [("bin", "clock", raw[None, :], [clock_bins]), ("bin", "waking", raw[None, :], [wake_bins])]
            for sample, partition, vals, bins in samples:
                day, night = _split_rows(vals, bins)
                if day.size == 0 or night.size == 0:
                    bundle.warnings.append(f"{g}/{set_name}/{partition}/{sample}: empty day or night sample")
                    continue
                two = mann_whitney_u(day, night, "two-sided")
                p_day_lower = mann_whitney_u(day, night, "less").p_value
                p_night_lower = mann_whitney_u(day, night, "greater").p_value
                rows.append(dict(category=set_name, group=g, partition=partition, sample=sample, U=two.statistic,
                                 p_value=two.p_value, p_day_lower=p_day_lower, p_night_lower=p_night_lower,
                                 n_day=day.size, n_night=night.size,
                                 lower="day" if p_day_lower < p_night_lower else "night"))
    bundle.tables["day_night_mwu"] = pd.DataFrame(rows)

    rows, chi_rows = [], []
    for g in groups:
        try:
            pc = period_comparison(table, groups[g], cfg.lockdown, label=g)
        except ValueError as exc:
            bundle.warnings.append(f"{g}: period comparison skipped ({exc})")
            continue
        rows.extend(pc.rows())
    bundle.tables["lockdown_comparison"] = pd.DataFrame(rows)
    frame = table.frame
    dates = pd.to_datetime(frame["local_date"]).dt.date
    inside = (dates >= cfg.lockdown[0]) & (dates <= cfg.lockdown[1])
    dis = frame["category"].isin([c.value for c in DISINFORMATIVE])
    counts = np.array([[int((inside & dis).sum()), int((inside & ~dis).sum())],
                       [int((~inside & dis).sum()), int((~inside & ~dis).sum())]])
    chi = bundle.tables["chi_square"]
    bundle.tables["chi_square"] = pd.concat([chi, pd.DataFrame([_chi_row("lockdown_by_disinformative", counts)])],
                                            ignore_index=True)


# -- emission -----------------------------------------------------------------

def _to_jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return None if not np.isfinite(v) else float(v)
    if isinstance(v, float) and not np.isfinite(v):
        return None
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_to_jsonable(x) for x in v]
    return v


def emit_report(bundle: ReportBundle, output_dir=None, formats=None) -> list[Path]:
    """Write every table (CSV), a JSON summary and optionally SVG plots.

    Each CSV starts with a ``# config_hash=...`` comment line; the JSON files
    carry the same hash under ``config_hash``.  Output is a pure function of
    the bundle.
    """
    cfg = bundle.config
    out = Path(output_dir or cfg.output_dir)
    formats = set(formats or cfg.formats)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("report", exc) from exc
    written = []
    h = bundle.config_hash
    if "csv" in formats:
        for name in sorted(bundle.tables):
            path = out / f"{name}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(f"# config_hash={h}\n")
                bundle.tables[name].to_csv(fh, index=False, lineterminator="\n")
            written.append(path)
    if "json" in formats:
        config = {k: v for k, v in cfg.to_dict().items() if k not in _UNHASHED}
        summary = dict(config_hash=h, config=config, summary=bundle.summary,
                       warnings=bundle.warnings, tables=sorted(bundle.tables))
        path = out / "summary.json"
        path.write_text(json.dumps(_to_jsonable(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
        tables = {name: json.loads(t.to_json(orient="records", double_precision=15))
                  for name, t in sorted(bundle.tables.items())}
        path = out / "tables.json"
        path.write_text(json.dumps(dict(config_hash=h, tables=tables), sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    if "svg" in formats:
        from .plots import write_plots
        written.extend(write_plots(bundle, out))
    return written


def load_bundle(directory) -> ReportBundle:
    """Rebuild a bundle (tables and summary) from an emitted report directory."""
    directory = Path(directory)
    summary = json.loads((directory / "summary.json").read_text(encoding="utf-8"))
    config = RunConfig.from_mapping({k: v for k, v in summary["config"].items()})
    tables = {}
    for name in summary["tables"]:
        path = directory / f"{name}.csv"
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
            if first != f"# config_hash={summary['config_hash']}":
                raise ConfigError(f"{path} belongs to a different configuration")
            tables[name] = pd.read_csv(fh, keep_default_na=True)
    return ReportBundle(config, tables, summary["summary"], summary["warnings"])
