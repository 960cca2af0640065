"""
コマンドラインのエントリーポイント
python -m app.main {run, detect, efficiency, analyze-em}

終了コード: 0 鍵確立 / 1 設定・入力エラー / 2 セッション終了（盗聴検出または鍵未確立）
"""

from typing import Optional, Sequence
import argparse
import logging
import sys

from app.config import settings
from app.core.adversary import (
    AttackConfigError,
    AttackKind,
    AttackStrategy,
    PhaseScope,
    adversary_engine,
)
from app.core.postproc import post_processor
from app.core.protocol import protocol_engine
from app.schemas import ExperimentConfig, PostprocConfig, ProtocolParams
from app.services.report_service import (
    ANALYZE_COLUMNS,
    DETECT_COLUMNS,
    EFFICIENCY_COLUMNS,
    RUN_COLUMNS,
    report_service,
)
from app.services.unitary_loader import UnitaryFileError, load_entangle_measure_config
from app.utils.seeding import substream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_DETECTED = 2


class CliUsageError(ValueError):
    """引数の誤り（終了コード1）"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(f"{self.prog}: {message}")


def configure_logging():
    # 標準出力は結果専用、ログは標準エラーへ
    logging.basicConfig(
        level=logging.DEBUG if settings.DEBUG else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def _add_size_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--n", type=int, default=settings.DEFAULT_N, help="最終的な鍵位置数 n")
    parser.add_argument("--delta", type=int, default=settings.DEFAULT_DELTA, help="第1フェーズの検査数 δ")
    parser.add_argument("--nu", type=int, default=settings.DEFAULT_NU, help="第2フェーズの検査数 ν")


def _add_output_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--out", default=None, help="出力ファイル（省略時は標準出力）")


def _add_attack_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--attack", choices=[k.value for k in AttackKind], default=AttackKind.NONE.value)
    parser.add_argument("--phase", choices=[p.value for p in PhaseScope], default=PhaseScope.BOTH.value)
    parser.add_argument("--em-file", default=None, help="entangle-measure 攻撃の設定 JSON")
    parser.add_argument("--pin-fake-zero", action="store_true", help="intercept-resend の偽粒子を |0⟩ に固定")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqkd", description=settings.APP_NAME)
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = subparsers.add_parser("run", help="プロトコルを1回実行")
    _add_size_arguments(run)
    _add_attack_arguments(run)
    run.add_argument("--seed", type=int, default=None)
    _add_output_arguments(run)
    run.add_argument("--abort-threshold", type=float, default=None, help="検査失敗率がこれを超えたら終了")
    run.add_argument("--block-size", type=int, default=settings.RECONCILE_BLOCK_SIZE)
    run.add_argument("--key-length", type=int, default=None, help="最終鍵長 m")
    run.add_argument("--store", action="store_true", help="結果を DATABASE_URL に保存")
    run.add_argument("--transcript", default=None, help="トランスクリプトの JSON Lines 出力先")

    detect = subparsers.add_parser("detect", help="検出確率の閉形式とモンテカルロ推定")
    _add_size_arguments(detect)
    _add_attack_arguments(detect)
    detect.add_argument("--trials", type=int, default=settings.DEFAULT_TRIALS)
    detect.add_argument("--seed", type=int, default=None)
    detect.add_argument("--workers", type=int, default=None)
    _add_output_arguments(detect)

    efficiency = subparsers.add_parser("efficiency", help="量子ビット効率")
    efficiency.add_argument("--n", type=int, nargs="+", required=True)
    efficiency.add_argument("--delta", type=int, default=settings.DEFAULT_DELTA)
    efficiency.add_argument("--nu", type=int, default=settings.DEFAULT_NU)
    _add_output_arguments(efficiency)

    analyze = subparsers.add_parser("analyze-em", help="entangle-measure 攻撃の解析")
    analyze.add_argument("--em-file", required=True)
    analyze.add_argument("--phase", choices=[p.value for p in PhaseScope], default=PhaseScope.BOTH.value)
    analyze.add_argument("--error-tol", type=float, default=1e-9)
    _add_output_arguments(analyze)

    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """解析済み引数を検証済みの実行設定に変換"""
    seed = settings.resolve_seed(getattr(args, "seed", None))
    fields = {
        "command": args.command,
        "seed": seed,
        "output_format": args.format,
        "output_path": args.out,
    }
    if args.command in ("run", "detect"):
        fields["params"] = ProtocolParams(n=args.n, delta=args.delta, nu=args.nu, seed=seed)
        fields.update(attack=args.attack, em_file=args.em_file, pin_fake_zero=args.pin_fake_zero)
    if args.command == "run":
        fields.update(
            abort_threshold=args.abort_threshold,
            block_size=args.block_size,
            key_length=args.key_length,
            store=args.store,
            transcript=args.transcript,
        )
    elif args.command == "detect":
        fields.update(trials=args.trials, workers=args.workers)
    elif args.command == "efficiency":
        fields.update(n_values=args.n, delta=args.delta, nu=args.nu)
    elif args.command == "analyze-em":
        fields.update(em_file=args.em_file, error_tol=args.error_tol)
    if args.command != "efficiency":
        fields["phase_scope"] = args.phase
    return ExperimentConfig(**fields)


def build_strategy(config: ExperimentConfig) -> AttackStrategy:
    kind = AttackKind(config.attack)
    em_config = None
    if kind is AttackKind.ENTANGLE_MEASURE:
        if not config.em_file:
            raise AttackConfigError("entangle-measure 攻撃には --em-file が必要です")
        em_config = load_entangle_measure_config(config.em_file)
    return AttackStrategy(
        kind=kind,
        phase_scope=PhaseScope(config.phase_scope),
        em_config=em_config,
        pin_fake_zero=config.pin_fake_zero,
    )


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        logger.info(f"Output written: {out}")
    else:
        sys.stdout.write(text)


def cmd_run(config: ExperimentConfig) -> int:
    params = config.params
    strategy = build_strategy(config)
    postproc_config = PostprocConfig(
        block_size=config.block_size, output_length=config.key_length, hash_seed=config.seed
    )

    result = protocol_engine.run_session(
        params,
        attack=strategy,
        rng=substream(config.seed),
        postproc_config=postproc_config,
        abort_threshold=config.abort_threshold,
    )

    tally = post_processor.count_consumed_qubits(result)
    expected = post_processor.qubit_efficiency(params.n, params.delta, params.nu).gamma_q

    distinguishability = None
    em_config = strategy.as_entangle_measure_config()
    if em_config is not None and strategy.kind is not AttackKind.NONE:
        distinguishability = max(
            adversary_engine.analyze_entangle_measure(em_config, phase).probe_distinguishability
            for phase in strategy.phase_scope.phases
        )

    if config.transcript:
        with open(config.transcript, "w", encoding="utf-8", newline="\n") as f:
            report_service.write_transcript(result, f)

    if config.store:
        from app.models.database import SessionLocal, init_db
        from app.services.session_store import session_store

        init_db()
        db = SessionLocal()
        try:
            session_store.save_session(db, result)
        finally:
            db.close()

    row = report_service.run_row(result, tally.count, expected, distinguishability)
    _emit(report_service.render([row], RUN_COLUMNS, config.output_format, single=True), config.output_path)
    if result.detected:
        return EXIT_DETECTED
    # 検査は通過したが誤り訂正に失敗した場合も鍵は確立していない
    if result.final_key is None:
        logger.warning("No final key established, session terminated")
        return EXIT_DETECTED
    return EXIT_OK


def cmd_detect(config: ExperimentConfig) -> int:
    strategy = build_strategy(config)
    rng = substream(config.seed)
    rows = [
        adversary_engine.detection_row(config.params, strategy, phase, config.trials, rng, workers=config.workers)
        for phase in strategy.phase_scope.phases
    ]
    text = report_service.render(report_service.detection_rows(rows), DETECT_COLUMNS, config.output_format)
    _emit(text, config.output_path)
    return EXIT_OK


def cmd_efficiency(config: ExperimentConfig) -> int:
    accounts = [post_processor.qubit_efficiency(n, config.delta, config.nu) for n in config.n_values]
    rows = report_service.efficiency_rows(accounts)
    _emit(report_service.render(rows, EFFICIENCY_COLUMNS, config.output_format), config.output_path)
    return EXIT_OK


def cmd_analyze_em(config: ExperimentConfig) -> int:
    em_config = load_entangle_measure_config(config.em_file)
    rows = []
    for phase in PhaseScope(config.phase_scope).phases:
        report = adversary_engine.analyze_entangle_measure(em_config, phase)
        rows.append(report_service.analysis_row(report, adversary_engine.certificate_holds(report, config.error_tol)))
    _emit(report_service.render(rows, ANALYZE_COLUMNS, config.output_format), config.output_path)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "detect": cmd_detect,
    "efficiency": cmd_efficiency,
    "analyze-em": cmd_analyze_em,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = build_config(args)
        return COMMANDS[config.command](config)
    except CliUsageError as e:
        sys.stderr.write(parser.format_usage())
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    except (UnitaryFileError, AttackConfigError, ValueError, OSError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
