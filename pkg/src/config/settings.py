"""
應用程式設定配置
"""
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Laboratory settings"""

    model_config = SettingsConfigDict(
        env_prefix="TORUS_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 基本設定
    app_name: str = "Torus Lab"
    app_version: str = "1.0.0"
    debug: bool = False

    # 日誌設定
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_file: Optional[str] = None

    # 模型設定
    closedness_tol: float = 1e-10
    gauge_tol: float = 1e-10
    positivity_oversampling: int = 4
    positivity_margin_factor: float = 10.0
    positivity_max_points: int = 2_000_000

    # 積分器設定
    integrator_method: str = Field(default="DOP853", pattern="^(DOP853|RK45|midpoint)$")
    integrator_tol: float = 1e-10
    min_step_factor: float = 1e-12
    max_steps: int = 2_000_000
    midpoint_step: float = 1e-2
    midpoint_iterations: int = 50

    # 共軛點偵測設定
    conjugate_t_floor: float = 1e-6
    conjugate_sample_dt: float = 0.02
    conjugate_zero_threshold: float = 1e-7
    conjugate_dip_threshold: float = 1e-4
    conjugate_time_tol: float = 1e-9

    # Riccati 設定
    riccati_blowup_norm: float = 1e8
    riccati_collapse_ratio: float = 1e-4
    lagrangian_tol: float = 1e-10

    # 求積設定
    sphere_points_2d: int = 64
    sphere_order: int = 26
    quadrature_min_grid: int = 16
    closed_form_grid: int = 64
    quadrature_chunk: int = 256
    grid_convergence_tol: float = 1e-8

    # 存儲設定
    output_dir: str = "./data/runs"
    models_dir: str = "./data/models"
    run_index_name: str = "runs.jsonl"

    # 執行設定
    workers: int = 1
    default_seed: int = 20240101


# 全域設定實例
settings = Settings()
