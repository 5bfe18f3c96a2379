pub const DEFAULT_DIO_C0: f64 = 0.0337;

/// Lower scale `c1` of the child strip `c1·ε ≤ |u×v| ≤ ε`, as `1/DEFAULT_C1_INV`.
pub const DEFAULT_C1_INV: u32 = 4;

/// Per-node child count constant `ρ₂` in `ρ₂ |w|^δ / log|w|`.
pub const DEFAULT_RHO2: f64 = 0.0016;

/// Smallest root length for which the spectrum condition past `t_max` is accepted.
pub const DEFAULT_L0: f64 = 4.683;

/// Constant `c₀` of the growth clause `m_{j+1} > m_j + c₀ e^{−m_j}`.
pub const DEFAULT_SLOW_C0: f64 = 0.0103;

/// Strip count constant `ρ₁` in `count ≥ ρ₁ b ε`.
pub const DEFAULT_RHO1: f64 = 0.375;
