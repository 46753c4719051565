#pragma once

namespace fracrisk {

/// One-parameter Mittag-Leffler function E_beta(z) on the completely
/// monotone branch 0 < beta <= 1, z <= 0. Relative accuracy ~1e-12.
double mittag_leffler(double beta, double z);

}  // namespace fracrisk
