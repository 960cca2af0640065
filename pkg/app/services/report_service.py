"""
出力サービス
結果の行を CSV / JSON に整形し、トランスクリプトを JSON Lines で書き出す
"""

from typing import Dict, List, Optional, Sequence, TextIO
import json
import logging

import pandas as pd

from app.schemas import DetectionRow, EfficiencyAccount, LeakageReport, SessionResult

logger = logging.getLogger(__name__)

DETECT_COLUMNS = ["attack", "phase", "p_analytic", "p_hat", "std_err", "trials"]
EFFICIENCY_COLUMNS = ["n", "delta", "nu", "lambda_b", "gamma_q", "gamma_c", "eta"]
RUN_COLUMNS = [
    "detected",
    "detection_phase",
    "info_length",
    "m_a1_length",
    "m_a2_length",
    "leaked_bits",
    "final_key",
    "final_key_bob",
    "keys_agree",
    "qubits_consumed",
    "qubits_expected",
    "probe_distinguishability",
]
ANALYZE_COLUMNS = ["phase", "ctrl_error", "sift_error", "probe_distinguishability", "certificate"]


class ReportService:
    """結果出力サービス"""

    def detection_rows(self, rows: Sequence[DetectionRow]) -> List[Dict]:
        return [row.model_dump() for row in rows]

    def efficiency_rows(self, accounts: Sequence[EfficiencyAccount]) -> List[Dict]:
        return [account.model_dump(include=set(EFFICIENCY_COLUMNS)) for account in accounts]

    def analysis_row(self, report: LeakageReport, certificate: bool) -> Dict:
        return {**report.model_dump(), "certificate": certificate}

    def run_row(
        self,
        result: SessionResult,
        qubits_consumed: int,
        qubits_expected: int,
        probe_distinguishability: Optional[float] = None,
    ) -> Dict:
        """run 出力の1行（検出時は鍵関連の列が空）"""
        key = result.key_material
        return {
            "detected": result.detected,
            "detection_phase": result.detection_phase,
            "info_length": len(key.info_alice) if key else None,
            "m_a1_length": len(key.m_a1) if key else None,
            "m_a2_length": len(key.m_a2) if key else None,
            "leaked_bits": result.leaked_bits,
            "final_key": result.final_key_hex,
            "final_key_bob": result.final_key_bob_hex,
            "keys_agree": result.keys_agree,
            "qubits_consumed": qubits_consumed,
            "qubits_expected": qubits_expected,
            "probe_distinguishability": probe_distinguishability,
        }

    def to_frame(self, rows: Sequence[Dict], columns: Sequence[str]) -> pd.DataFrame:
        return pd.DataFrame(list(rows), columns=list(columns))

    def render(self, rows: Sequence[Dict], columns: Sequence[str], fmt: str, single: bool = False) -> str:
        """CSV（LF 改行）か JSON（列順を保持）に整形"""
        if fmt == "csv":
            return self.to_frame(rows, columns).to_csv(index=False, lineterminator="\n")
        if fmt == "json":
            ordered = [{column: row.get(column) for column in columns} for row in rows]
            payload = ordered[0] if single else ordered
            return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"
        raise ValueError(f"未対応の出力形式です: {fmt}")

    def write_transcript(self, result: SessionResult, stream: TextIO) -> int:
        """RoundRecord を1行1件の JSON で書き出し、書いた件数を返す"""
        for record in result.records:
            stream.write(record.model_dump_json() + "\n")
        logger.info(f"Transcript written: {len(result.records)} records")
        return len(result.records)


report_service = ReportService()
