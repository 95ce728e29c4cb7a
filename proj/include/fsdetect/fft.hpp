#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fsd {

using cd = std::complex<double>;

/// Unnormalized forward DFT: out[k] = sum_n in[n] exp(-j 2 pi n k / n_out).
/// `in` is zero-padded to `n_out` samples; n_out must be >= in.size().
std::vector<cd> dft(std::span<const cd> in, std::size_t n_out);

/// Unnormalized backward DFT: out[k] = sum_n in[n] exp(+j 2 pi n k / n_out).
/// Zero-pads like dft(); divide by n_out for the inverse of dft().
std::vector<cd> dft_backward(std::span<const cd> in, std::size_t n_out);

} // namespace fsd
