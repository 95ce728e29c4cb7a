#include "fsdetect/fft.hpp"

#include "fsdetect/error.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace fsd {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans live for the lifetime of the process.
fftw_plan plan_for(std::size_t n, int sign) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, int>, fftw_plan> plans;

    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_pair(n, sign);
    if (auto it = plans.find(key); it != plans.end()) {
        return it->second;
    }
    std::vector<cd> a(n), b(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex *>(a.data()),
                                   reinterpret_cast<fftw_complex *>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(key, p);
    return p;
}

std::vector<cd> transform(std::span<const cd> in, std::size_t n_out, int sign) {
    if (n_out == 0) {
        throw ParameterError("DFT length must be positive");
    }
    if (in.size() > n_out) {
        throw TruncationError("DFT length " + std::to_string(n_out) + " is shorter than the input (" +
                              std::to_string(in.size()) + " samples)");
    }
    std::vector<cd> padded(n_out, cd{0.0, 0.0});
    std::copy(in.begin(), in.end(), padded.begin());
    std::vector<cd> out(n_out);
    fftw_execute_dft(plan_for(n_out, sign), reinterpret_cast<fftw_complex *>(padded.data()),
                     reinterpret_cast<fftw_complex *>(out.data()));
    return out;
}

} // namespace

std::vector<cd> dft(std::span<const cd> in, std::size_t n_out) {
    return transform(in, n_out, FFTW_FORWARD);
}

std::vector<cd> dft_backward(std::span<const cd> in, std::size_t n_out) {
    return transform(in, n_out, FFTW_BACKWARD);
}

} // namespace fsd
