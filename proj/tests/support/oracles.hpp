#pragma once

// Reference implementations used only by tests. Each one is written
// independently of the library code it checks: plain loops, explicit
// matrices, no shared helpers beyond the value types.

#include <vector>

#include "nos/codebook.hpp"
#include "nos/neural.hpp"
#include "nos/types.hpp"

namespace nos::oracle {

/// Remainder of msg(x) * x^11 divided by x^11+x^10+x^9+x^5+1 by schoolbook
/// long division on a coefficient array.
std::vector<int> crc11_long_division(const std::vector<int>& msg);

/// Big-endian positional sum.
unsigned big_endian_value(const std::vector<int>& bits);

/// S[a][t] = s[t*nt + a] with explicit loops.
CMat reshape_loops(const CVec& s, int nt, int mc);

/// words_h[v][:, m] computed with scalar loops over (r, t, a).
std::vector<CMat> post_channel_loops(const Codebook& cb, const CMat& H, int nt, int mc);

/// Exhaustive argmin over all M^V index tuples of ||y - sum_v C_H[v,:,m_v]||^2.
std::vector<int> brute_force_ml(const CVec& y, const std::vector<CMat>& slices);

/// Solves (H'H + (sigma2/P) I) X = H'Y by Gaussian elimination with partial pivoting.
CMat mmse_gauss(const CMat& Y, const CMat& H, double sigma2, double P);

/// Layer-by-layer forward pass over std::vector<double>.
std::vector<double> forward_reference(const std::vector<nn::Layer>& layers, const std::vector<double>& x);

/// Explicit Kronecker power of F = [1 0; 1 1] and a vector-matrix product mod 2.
std::vector<int> polar_generator_encode(const std::vector<int>& u);

/// Exhaustive ML over all 2^k frames: maximizes sum_j log P(x_j | llr_j) of
/// the shortened codeword; frame bits sit at the given info positions.
std::vector<int> polar_exhaustive_ml(const std::vector<double>& llrs, const std::vector<int>& info_positions, int mother_n);

/// log sum exp(-d/sigma2) over each bit hypothesis, evaluated directly
/// (no max subtraction). Bit order: antenna a carries bits 2a, 2a+1.
std::vector<double> mimo_llr_naive(const CVec& y, const CMat& H, double sigma2);

}  // namespace nos::oracle
