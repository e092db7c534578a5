from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class TransformerConfig:
    input_dim: int = 142
    n_blocks: int = 4
    n_heads: int = 4
    head_size: int = 256
    ff_filters: int = 4
    enc_dropout: float = 0.25
    mlp_units: tuple[int, int] = (128, 64)
    mlp_dropout: float = 0.4
    ln_eps: float = 1e-6

    def __post_init__(self):
        self.mlp_units = tuple(int(u) for u in self.mlp_units)
        sizes = [self.input_dim, self.n_blocks, self.n_heads, self.head_size, self.ff_filters, *self.mlp_units]
        if len(self.mlp_units) != 2 or any(s <= 0 for s in sizes):
            raise ValueError(f"all sizes must be positive with two MLP layers: {self}")
        for p in (self.enc_dropout, self.mlp_dropout):
            if not 0.0 <= p < 1.0:
                raise ValueError(f"dropout {p} outside [0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mlp_units"] = list(self.mlp_units)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TransformerConfig":
        return cls(**{**d, "mlp_units": tuple(d.get("mlp_units", (128, 64)))})


@dataclass
class LossConfig:
    kind: str = "focal"
    alpha: float = 0.95
    gamma: float = 1.5

    def __post_init__(self):
        if self.kind not in ("focal", "cross_entropy"):
            raise ValueError(f"unknown loss {self.kind!r}")
        if not 0.0 < self.alpha < 1.0 or self.gamma < 0:
            raise ValueError("focal loss needs alpha in (0, 1) and gamma >= 0")


@dataclass
class TrainParams:
    lr: float = 5e-4
    batch_size: int = 72
    max_epochs: int = 8000
    val_fraction: float = 0.10
    threshold: float = 0.5
    cost_fp: float = 10.0
    cost_fn: float = 500.0
