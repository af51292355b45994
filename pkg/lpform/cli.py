import functools
import json
import math
from pathlib import Path

import click
import tabulate

from . import __version__
from .corpus import (
    NOISE_FILE, NOISE_WHITE, NoiseSpec, iter_synthetic_corpus, make_pseudo_babble, measured_snr,
    mix_noise,
)
from .evaluation import ALL, EvalConfig, evaluate, report_table, write_report_csv
from .experiment import (
    BABBLE, CLEAN, GCI_DETECT, GCI_ORACLE, ExperimentConfig, NoiseCondition, find_utterance_files,
    parse_conditions, run_reproduction, run_synthetic_experiment, tracker_table, write_results_csv,
)
from .formant_track import read_track, write_track
from .helpers import (
    atomic_output, atomic_path, format_sig, limit_str_length, parse_name_list, parse_snr, parse_snr_list,
)
from .phone_labels import CATEGORIES, read_category_map, read_phn
from .qcp import QcpParams, detect_gci, read_gci_file, write_gci_file
from .refine import (
    AnalysisSettings, collision_count, compute_peak_track, estimate_track, ordering_violations,
    refine_with_peaks,
)
from .signal import FrameSpec, read_wav, write_wav
from .spectrum import METHOD_QCP_FB, METHODS, SCALE_DB, SCALE_LINEAR, write_spectra_dump

DEFAULT_APP_DIR = click.get_app_dir("lpform", force_posix=True)

DEFAULTS = {
    'method': METHOD_QCP_FB,
    'order': 13,
    'frame_ms': 25.0,
    'shift_ms': 10.0,
    'preemph': 0.97,
    'peak_width_hz': 100.0,
    'peak_scale': SCALE_DB,
    'position_quotient': 0.05,
    'duration_quotient': 0.7,
    'ramp_ms': 0.7,
    'd_min': 1e-5,
    'align_offset_ms': 12.5,
    'threads': 1,
    'tau_r': 0.30,
    'tau_a': 300.0,
    'labels_rate': 16000,
    'category_map': None,
}


def ensure_path(path):
    if not path.exists():
        path.mkdir(parents=True)


def _load_config(path):
    config_path = Path(path) / 'config.json'
    if not config_path.exists():
        return {}

    with config_path.open() as config_file:
        config = json.load(config_file)

    unknown = sorted(set(config) - set(DEFAULTS))
    if unknown:
        click.secho(f"Ignoring unknown configuration keys: {', '.join(unknown)}", fg='yellow', err=True)
    return config


def _save_config(config, path):
    config_path = Path(path)
    ensure_path(config_path)

    config_file_path = config_path / 'config.json'
    with config_file_path.open('w') as config_file:
        json.dump(config, config_file, indent=4)
    click.echo("Configuration saved")


def _setting(obj, key, value=None):
    """Command line value, else configured value, else the built-in default."""
    if value is not None:
        return value
    return obj.get('config', {}).get(key, DEFAULTS[key])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _write_meta(output, command, parameters):
    """Provenance sidecar `<output>.meta.json`; no timestamps, so reruns are byte-identical."""
    meta = {
        'command': command,
        'version': __version__,
        'parameters': _jsonable(parameters),
    }
    with atomic_output(f"{output}.meta.json") as meta_file:
        json.dump(meta, meta_file, indent=4, sort_keys=True)
        meta_file.write("\n")


def _warn(message):
    click.secho(message, fg='yellow', err=True)


def _progress(iterable, label, length=None):
    return click.progressbar(iterable, length=length, label=label,
                             file=click.get_text_stream('stderr'))


@click.group()
@click.version_option(version=__version__)
@click.option(
    "-c", "--config-dir",
    type=click.Path(),
    default=DEFAULT_APP_DIR,
    show_default=True,
    help="The path to the directory containing the configuration file. "
         "Will be created by `lpform setup` if it does not exist.",
)
@click.pass_context
def cli(ctx, config_dir):
    """
    LP-based formant estimation and refinement of external formant tracks,
    with FDR/FEE/MAD evaluation. Audio is expected as 8 kHz 16-bit mono WAV.
    """
    ctx.ensure_object(dict)
    ctx.obj['config_dir'] = config_dir
    ctx.obj['config'] = _load_config(config_dir)


# ============================
# =====  Shared options  =====
# ============================

_POSITIVE = click.FloatRange(min=0, min_open=True)

_METHOD_OPTION = click.option(
    '--method', type=click.Choice(METHODS),
    help=f"All-pole model behind the spectral peaks. [default: {DEFAULTS['method']}]")

_ANALYSIS_OPTIONS = [
    click.option('--order', type=click.IntRange(min=1),
                 help=f"Prediction order. [default: {DEFAULTS['order']}]"),
    click.option('--frame-ms', type=_POSITIVE,
                 help=f"Frame length in ms. [default: {DEFAULTS['frame_ms']}]"),
    click.option('--shift-ms', type=_POSITIVE,
                 help=f"Frame shift in ms. [default: {DEFAULTS['shift_ms']}]"),
    click.option('--preemph', type=click.FloatRange(min=0, max=1, max_open=True),
                 help=f"Pre-emphasis coefficient. [default: {DEFAULTS['preemph']}]"),
    click.option('--peak-width-hz', type=_POSITIVE,
                 help="Width of the Gaussian-derivative peak picker in Hz "
                      f"(twice its standard deviation). [default: {DEFAULTS['peak_width_hz']}]"),
    click.option('--peak-scale', type=click.Choice([SCALE_DB, SCALE_LINEAR]),
                 help=f"Spectrum scale the peaks are picked on. [default: {DEFAULTS['peak_scale']}]"),
    click.option('--position-quotient', type=click.FloatRange(min=0, max=1, max_open=True),
                 help="Start of the QCP weighted region as a fraction of the glottal period. "
                      f"[default: {DEFAULTS['position_quotient']}]"),
    click.option('--duration-quotient', type=click.FloatRange(min=0, max=1, min_open=True),
                 help="Length of the QCP weighted region as a fraction of the glottal period. "
                      f"[default: {DEFAULTS['duration_quotient']}]"),
    click.option('--ramp-ms', type=click.FloatRange(min=0),
                 help=f"QCP weight ramp duration in ms. [default: {DEFAULTS['ramp_ms']}]"),
    click.option('--d-min', type=click.FloatRange(min=0, max=1, min_open=True),
                 help=f"QCP weight outside the weighted region. [default: {DEFAULTS['d_min']}]"),
    click.option('--align-offset-ms', type=float,
                 help="Subtracted from frame centres to timestamp track rows, so the first "
                      f"frame lands on 0 s. [default: {DEFAULTS['align_offset_ms']}]"),
    click.option('--threads', type=click.IntRange(min=1),
                 help=f"Frames analysed in parallel. [default: {DEFAULTS['threads']}]"),
]

_EVAL_OPTIONS = [
    click.option('--tau-r', type=_POSITIVE,
                 help=f"Relative detection threshold (fraction). [default: {DEFAULTS['tau_r']}]"),
    click.option('--tau-a', type=_POSITIVE,
                 help=f"Absolute detection threshold in Hz. [default: {DEFAULTS['tau_a']}]"),
    click.option('--categories', default=ALL, show_default=True,
                 help=f"'all' or a comma separated list of: {', '.join(CATEGORIES)}. "
                      "Needs phone labels unless 'all'."),
    click.option('--labels-rate', type=click.IntRange(min=1),
                 help=f"Sample rate the phone label boundaries count in. [default: {DEFAULTS['labels_rate']}]"),
    click.option('--category-map', type=click.Path(exists=True, dir_okay=False),
                 help="Custom phone to category mapping file."),
]


def _apply(options, f):
    for option in reversed(options):
        f = option(f)
    return f


def analysis_options(with_method=True):
    options = [_METHOD_OPTION] + _ANALYSIS_OPTIONS if with_method else _ANALYSIS_OPTIONS
    return functools.partial(_apply, options)


def eval_options(f):
    return _apply(_EVAL_OPTIONS, f)


def _analysis_settings(obj, method=None, order=None, frame_ms=None, shift_ms=None, preemph=None,
                       peak_width_hz=None, peak_scale=None, position_quotient=None,
                       duration_quotient=None, ramp_ms=None, d_min=None, align_offset_ms=None,
                       threads=None):
    get = functools.partial(_setting, obj)
    try:
        return AnalysisSettings(
            method=get('method', method),
            order=int(get('order', order)),
            frame=FrameSpec(float(get('frame_ms', frame_ms)), float(get('shift_ms', shift_ms))),
            preemph=float(get('preemph', preemph)),
            qcp=QcpParams(
                ramp_duration_ms=float(get('ramp_ms', ramp_ms)),
                position_quotient=float(get('position_quotient', position_quotient)),
                duration_quotient=float(get('duration_quotient', duration_quotient)),
                d_min=float(get('d_min', d_min)),
            ),
            peak_width_hz=float(get('peak_width_hz', peak_width_hz)),
            peak_scale=get('peak_scale', peak_scale),
            align_offset_ms=float(get('align_offset_ms', align_offset_ms)),
            threads=int(get('threads', threads)),
        )
    except ValueError as e:
        raise click.UsageError(str(e))


def _eval_setup(obj, tau_r, tau_a, categories, labels_rate, category_map):
    """:return: (EvalConfig, category map or None for the default one, labels rate)"""
    get = functools.partial(_setting, obj)
    try:
        cfg = EvalConfig(
            tau_r=float(get('tau_r', tau_r)),
            tau_a=float(get('tau_a', tau_a)),
            categories=parse_name_list(categories) or (ALL,),
        )
    except ValueError as e:
        raise click.UsageError(str(e))
    map_path = get('category_map', category_map)
    mapping = read_category_map(map_path) if map_path else None
    return cfg, mapping, int(get('labels_rate', labels_rate))


def _read_gcis(gci_file, audio, settings):
    if gci_file is None:
        return None
    if settings.method != METHOD_QCP_FB:
        _warn(f"GCI file is only used by {METHOD_QCP_FB}, ignoring it.")
        return None
    return read_gci_file(gci_file, len(audio))


def _report_analysis(peak_track):
    if peak_track.degenerate:
        _warn(f"{peak_track.degenerate} frame(s) had an ill-conditioned or silent LP system.")
    if peak_track.clamped:
        _warn(f"{peak_track.clamped} frame(s) had a vanishing inverse filter on the spectral grid.")


def _report_labels(report):
    if report.skipped:
        _warn(f"{report.skipped} frame(s) with a valid reference had no valid hypothesis and were skipped.")
    if report.unknown_labels:
        _warn(f"{report.unknown_labels} frame(s) had phone labels missing from the category map "
              f"and were counted as other.")


# ============================
# =====    Commands     ======
# ============================

@cli.command()
@click.pass_obj
@click.argument('audio', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False, writable=True))
@click.option('--gci-file', type=click.Path(exists=True, dir_okay=False),
              help="GCI sample indices, one per line, instead of the built-in detector.")
@click.option('--dump-spectra', type=click.Path(dir_okay=False, writable=True),
              help="Also write every frame's all-pole spectrum as gnuplot data.")
@analysis_options()
def estimate(obj, audio, output, gci_file, dump_spectra, **analysis):
    """
    Estimates F1..F3 of AUDIO as the three lowest all-pole spectral peaks per
    frame and writes them as a track CSV to OUTPUT. Frames with fewer than
    three peaks are written as zeros.
    """
    settings = _analysis_settings(obj, **analysis)
    x = read_wav(audio)
    gcis = _read_gcis(gci_file, x, settings)

    peak_track = compute_peak_track(x, settings, gcis, keep_spectra=dump_spectra is not None)
    track = estimate_track(peak_track)

    with atomic_output(output) as track_file:
        write_track(track_file, track)
    if dump_spectra is not None:
        with atomic_output(dump_spectra) as dump_file:
            write_spectra_dump(dump_file, peak_track.times, peak_track.spectra)
    _write_meta(output, 'estimate', {
        'audio': audio,
        'gci_file': gci_file,
        'settings': settings.as_dict(),
    })

    _report_analysis(peak_track)
    invalid = len(track) - int(track.valid.sum())
    click.echo(f"{len(track)} frames written, {invalid} without three peaks.", err=True)


@cli.command()
@click.pass_obj
@click.argument('audio', type=click.Path(exists=True, dir_okay=False))
@click.argument('predicted', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False, writable=True))
@click.option('--gci-file', type=click.Path(exists=True, dir_okay=False),
              help="GCI sample indices, one per line, instead of the built-in detector.")
@analysis_options()
def refine(obj, audio, predicted, output, gci_file, **analysis):
    """
    Refines the PREDICTED track CSV of AUDIO: every formant becomes the
    all-pole spectral peak closest to it. The track has to be on the
    analysis grid of AUDIO.
    """
    settings = _analysis_settings(obj, **analysis)
    x = read_wav(audio)
    track = read_track(predicted)
    gcis = _read_gcis(gci_file, x, settings)

    peak_track = compute_peak_track(x, settings, gcis)
    refined = refine_with_peaks(track, peak_track)

    with atomic_output(output) as track_file:
        write_track(track_file, refined)
    _write_meta(output, 'refine', {
        'audio': audio,
        'predicted': predicted,
        'gci_file': gci_file,
        'settings': settings.as_dict(),
    })

    _report_analysis(peak_track)
    collisions = collision_count(refined)
    if collisions:
        _warn(f"{collisions} frame(s) have two formants on the same peak.")
    violations = ordering_violations(refined)
    if violations:
        _warn(f"{violations} frame(s) are not ordered F1 < F2 < F3.")
    click.echo(f"{len(refined)} frames refined.", err=True)


@cli.command('eval')
@click.pass_obj
@click.argument('reference', type=click.Path(exists=True, dir_okay=False))
@click.argument('hypothesis', type=click.Path(exists=True, dir_okay=False))
@click.argument('labels', type=click.Path(exists=True, dir_okay=False), required=False)
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True),
              help="Also write the report as CSV.")
@eval_options
def eval_tracks(obj, reference, hypothesis, labels, output, tau_r, tau_a, categories,
                labels_rate, category_map):
    """
    Scores the HYPOTHESIS track against the REFERENCE track: formant
    detection rate (FDR), formant estimation error (FEE) and mean absolute
    deviation (MAD) per formant. With a LABELS phone file the frames are
    broken down by phonetic category.
    """
    cfg, mapping, rate = _eval_setup(obj, tau_r, tau_a, categories, labels_rate, category_map)
    if labels is None and not cfg.all_categories:
        raise click.UsageError("Restricting the evaluation to categories needs a LABELS file.")

    report = evaluate(
        read_track(reference), read_track(hypothesis),
        labels=read_phn(labels) if labels else None,
        cfg=cfg, category_map=mapping, labels_rate=rate,
    )
    click.echo(report_table(report))
    _report_labels(report)

    if output is not None:
        with atomic_output(output) as report_file:
            write_report_csv(report_file, report)
        _write_meta(output, 'eval', {
            'reference': reference,
            'hypothesis': hypothesis,
            'labels': labels,
            'tau_r': cfg.tau_r,
            'tau_a': cfg.tau_a,
            'categories': cfg.categories,
            'labels_rate': rate,
            'category_map': _setting(obj, 'category_map', category_map),
        })


@cli.command('add-noise')
@click.pass_obj
@click.argument('audio', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False, writable=True))
@click.option('--snr-db', required=True, help="Target SNR in dB, or 'clean' for none.")
@click.option('--noise', default=NOISE_WHITE, show_default=True,
              help=f"'{NOISE_WHITE}', '{BABBLE}' (synthetic babble) or the path of a noise WAV.")
@click.option('--seed', type=int, default=0, show_default=True)
def add_noise(obj, audio, output, snr_db, noise, seed):
    """
    Adds noise to AUDIO at the given SNR, computed over the whole utterance,
    and writes the result to OUTPUT.
    """
    snr = parse_snr(snr_db)
    clean = read_wav(audio)
    if noise == NOISE_WHITE:
        noisy = mix_noise(clean, NoiseSpec(NOISE_WHITE, snr, seed))
    elif noise == BABBLE:
        babble = make_pseudo_babble(len(clean), seed=seed, sample_rate=clean.sample_rate)
        noisy = mix_noise(clean, NoiseSpec(NOISE_FILE, snr, seed), babble)
    elif Path(noise).is_file():
        noisy = mix_noise(clean, NoiseSpec(NOISE_FILE, snr, seed), read_wav(noise))
    else:
        raise click.BadParameter(f"expected '{NOISE_WHITE}', '{BABBLE}' or an existing WAV file, got {noise}",
                                 param_hint="'--noise'")

    with atomic_path(output) as tmp_path:
        clipped = write_wav(tmp_path, noisy)
    _write_meta(output, 'add-noise', {
        'audio': audio,
        'noise': noise,
        'snr_db': snr,
        'seed': seed,
    })

    if clipped:
        _warn(f"{clipped} sample(s) were clipped.")
    click.echo(f"Measured SNR: {format_sig(measured_snr(clean, noisy), 4)} dB", err=True)


@cli.command()
@click.pass_obj
@click.argument('output_dir', type=click.Path(file_okay=False, writable=True))
@click.option('-n', '--utterances', type=click.IntRange(min=1), default=1, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--frame-ms', type=_POSITIVE)
@click.option('--shift-ms', type=_POSITIVE)
@click.option('--align-offset-ms', type=float)
def synth(obj, output_dir, utterances, seed, frame_ms, shift_ms, align_offset_ms):
    """
    Writes a synthetic corpus to OUTPUT_DIR: per utterance an 8 kHz WAV, its
    ground-truth track CSV and its glottal pulse positions (.gci).
    """
    frame = FrameSpec(float(_setting(obj, 'frame_ms', frame_ms)), float(_setting(obj, 'shift_ms', shift_ms)))
    offset = float(_setting(obj, 'align_offset_ms', align_offset_ms))
    directory = Path(output_dir)
    ensure_path(directory)

    corpus = iter_synthetic_corpus(utterances, seed, frame, offset)
    with _progress(corpus, "Synthesizing", length=utterances) as bar:
        for utterance in bar:
            with atomic_path(directory / f"{utterance.name}.wav") as tmp_path:
                write_wav(tmp_path, utterance.audio)
            with atomic_output(directory / f"{utterance.name}.csv") as track_file:
                write_track(track_file, utterance.truth)
            with atomic_output(directory / f"{utterance.name}.gci") as gci_file:
                write_gci_file(gci_file, utterance.gcis)

    _write_meta(directory / 'corpus', 'synth', {
        'utterances': utterances,
        'seed': seed,
        'frame_ms': frame.length_ms,
        'shift_ms': frame.shift_ms,
        'align_offset_ms': offset,
    })
    click.echo(f"{utterances} utterance(s) written to {directory}", err=True)


@cli.command()
@click.pass_obj
@click.argument('audio', type=click.Path(exists=True, dir_okay=False))
@click.argument('output', type=click.Path(dir_okay=False, writable=True))
def gci(obj, audio, output):
    """
    Detects the glottal closure instants of AUDIO and writes their sample
    indices to OUTPUT, one per line, for use with --gci-file.
    """
    x = read_wav(audio)
    gcis = detect_gci(x)
    with atomic_output(output) as gci_file:
        write_gci_file(gci_file, gcis)
    _write_meta(output, 'gci', {'audio': audio})
    click.echo(f"{len(gcis)} GCIs detected.", err=True)


@cli.command()
@click.pass_obj
@click.option('-n', '--utterances', type=click.IntRange(min=1), default=20, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--spread-hz', type=_POSITIVE, default=150.0, show_default=True,
              help="Predictions are the truth plus uniform noise within this many Hz.")
@click.option('--noise', default=NOISE_WHITE, show_default=True,
              help=f"Comma separated noise kinds: {NOISE_WHITE}, {BABBLE}.")
@click.option('--snr-db', default='clean', show_default=True,
              help="Comma separated SNRs in dB; 'clean' adds the noise-free condition.")
@click.option('--gci-source', type=click.Choice([GCI_DETECT, GCI_ORACLE]), default=GCI_DETECT,
              show_default=True, help="Detected GCIs, or the true glottal pulse positions.")
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True),
              help="Also write all results as CSV.")
@click.option('--tau-r', type=_POSITIVE)
@click.option('--tau-a', type=_POSITIVE)
@analysis_options(with_method=False)
def experiment(obj, utterances, seed, spread_hz, noise, snr_db, gci_source, output, tau_r, tau_a,
               **analysis):
    """
    Runs the synthetic experiment: raw LP-COV and QCP-FB estimates, perturbed
    predictions standing in for an external tracker, and those predictions
    refined with either method, under every noise condition.
    """
    settings = _analysis_settings(obj, **analysis)
    cfg, _, _ = _eval_setup(obj, tau_r, tau_a, ALL, None, None)
    try:
        conditions = parse_conditions(parse_name_list(noise), parse_snr_list(snr_db))
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="'--noise'")
    config = ExperimentConfig(settings, cfg, tuple(conditions), spread_hz, seed, gci_source)

    corpus = iter_synthetic_corpus(utterances, seed, settings.frame, settings.align_offset_ms)
    with _progress(corpus, "Analysing utterances", length=utterances) as bar:
        result = run_synthetic_experiment(bar, config)

    for condition, reports in result.reports.items():
        click.secho(f"\n{condition}", fg='green', bold=True)
        click.echo(tracker_table(reports))

    if output is not None:
        with atomic_output(output) as results_file:
            write_results_csv(results_file, result.reports)
        _write_meta(output, 'experiment', {
            'utterances': utterances,
            'seed': seed,
            'spread_hz': spread_hz,
            'conditions': [c.label for c in conditions],
            'gci_source': gci_source,
            'tau_r': cfg.tau_r,
            'tau_a': cfg.tau_a,
            'settings': settings.as_dict(),
        })


@cli.command()
@click.pass_obj
@click.argument('reference_dir', type=click.Path(exists=True, file_okay=False))
@click.argument('audio_dir', type=click.Path(exists=True, file_okay=False))
@click.argument('predicted_dir', type=click.Path(exists=True, file_okay=False))
@click.option('--labels-dir', type=click.Path(exists=True, file_okay=False),
              help="Directory of <stem>.phn phone label files.")
@click.option('--noise', type=click.Choice([NOISE_WHITE, BABBLE]), default=NOISE_WHITE, show_default=True)
@click.option('--snr-db', default='clean', show_default=True, help="SNR in dB or 'clean'.")
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True),
              help="Also write all results as CSV.")
@eval_options
@analysis_options(with_method=False)
def reproduce(obj, reference_dir, audio_dir, predicted_dir, labels_dir, noise, snr_db, seed, output,
              tau_r, tau_a, categories, labels_rate, category_map, **analysis):
    """
    Scores external predictions of a real corpus before and after refinement
    with LP-COV and QCP-FB. Files are matched by stem: REFERENCE_DIR/<stem>.csv,
    AUDIO_DIR/<stem>.wav (8 kHz) and PREDICTED_DIR/<stem>.csv.
    """
    settings = _analysis_settings(obj, **analysis)
    cfg, mapping, rate = _eval_setup(obj, tau_r, tau_a, categories, labels_rate, category_map)
    if labels_dir is None and not cfg.all_categories:
        raise click.UsageError("Restricting the evaluation to categories needs --labels-dir.")
    snr = parse_snr(snr_db)
    condition = CLEAN if snr == math.inf else NoiseCondition(noise, snr)

    files, missing = find_utterance_files(reference_dir, audio_dir, predicted_dir, labels_dir)
    if missing:
        _warn(f"Skipping {len(missing)} utterance(s) with missing files: {', '.join(missing)}")
    if not files:
        raise click.ClickException("No utterance has all of its files.")

    with _progress(files, "Analysing utterances") as bar:
        result = run_reproduction(bar, settings, cfg, condition, seed, mapping, rate)

    click.secho(f"\n{condition.label}, {result.utterances} utterance(s)", fg='green', bold=True)
    categories_shown = [ALL] if labels_dir is None else list(next(iter(result.reports.values())).cells)
    for category in categories_shown:
        if len(categories_shown) > 1:
            click.secho(f"\n{category}", bold=True)
        click.echo(tracker_table(result.reports, category))
    if result.trimmed_frames:
        _warn(f"{result.trimmed_frames} reference frame(s) beyond the analysis grid were left out.")
    _report_labels(next(iter(result.reports.values())))

    if output is not None:
        with atomic_output(output) as results_file:
            write_results_csv(results_file, {condition.label: result.reports})
        _write_meta(output, 'reproduce', {
            'reference_dir': reference_dir,
            'audio_dir': audio_dir,
            'predicted_dir': predicted_dir,
            'labels_dir': labels_dir,
            'condition': condition.label,
            'seed': seed,
            'tau_r': cfg.tau_r,
            'tau_a': cfg.tau_a,
            'categories': cfg.categories,
            'labels_rate': rate,
            'settings': settings.as_dict(),
        })


@cli.command()
@click.option('-a', '--advanced', is_flag=True,
              help="Run a full config, including QCP parameters, thresholds and the category map.")
@click.pass_obj
def setup(obj, advanced):
    """
    Set up the defaults used when a flag is not given.
    """
    config = obj.get('config', {})
    get = functools.partial(_setting, obj)

    config_values = {
        'method': click.prompt("Analysis method", type=click.Choice(METHODS), default=get('method')),
        'order': click.prompt("Prediction order", type=click.IntRange(min=1), default=get('order')),
        'threads': click.prompt("Frames analysed in parallel", type=click.IntRange(min=1),
                                default=get('threads')),
    }
    if advanced:
        config_values.update({
            'position_quotient': click.prompt("QCP position quotient", type=float,
                                              default=get('position_quotient')),
            'duration_quotient': click.prompt("QCP duration quotient", type=float,
                                              default=get('duration_quotient')),
            'ramp_ms': click.prompt("QCP ramp duration (ms)", type=float, default=get('ramp_ms')),
            'd_min': click.prompt("QCP minimum weight", type=float, default=get('d_min')),
            'tau_r': click.prompt("Relative detection threshold", type=float, default=get('tau_r')),
            'tau_a': click.prompt("Absolute detection threshold (Hz)", type=float, default=get('tau_a')),
            'labels_rate': click.prompt("Phone label sample rate", type=int, default=get('labels_rate')),
        })
        category_map = click.prompt("Custom category map file (empty for the built-in one)",
                                    default=get('category_map') or '', show_default=False)
        if category_map and not Path(category_map).is_file():
            raise click.BadParameter(f"{category_map} is not a file.")
        config_values['category_map'] = category_map or None

    config.update(config_values)
    _save_config(config, obj['config_dir'])


@cli.command('config')
@click.pass_obj
def show_config(obj):
    """
    Shows the effective defaults and where each of them comes from.
    """
    config = obj.get('config', {})
    rows = [
        [key, limit_str_length(_setting(obj, key)), 'config' if key in config else 'default']
        for key in DEFAULTS
    ]
    click.echo(tabulate.tabulate(rows, headers=['Key', 'Value', 'Source']))
