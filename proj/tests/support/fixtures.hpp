#pragma once

#include "nos/codebook.hpp"
#include "nos/neural.hpp"

namespace nos::testing {

/// The designed stand-in for a desk-trained codebook: V=4, M=64, D=64.
Codebook desk_codebook();

/// Scaled canonical directions; needs V*M <= D.
Codebook orthogonal_codebook(int V, int D, int M);

/// Encoder stacks that reproduce `cb` (linear layer with the realified
/// codewords as columns, then power normalization), a zero residual module
/// and matched-filter decoders (realified codewords as rows, then softmax).
nn::WeightsBundle matched_filter_bundle(const Codebook& cb, int nt, int nr);

}  // namespace nos::testing
