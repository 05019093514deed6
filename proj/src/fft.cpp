#include "mflda/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace mflda::fft {
namespace {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  const Plans& get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> re(n);
    std::vector<Complex> co(n / 2 + 1);
    auto* cptr = reinterpret_cast<fftw_complex*>(co.data());
    const int ni = static_cast<int>(n);
    Plans p;
    p.r2c = fftw_plan_dft_r2c_1d(ni, re.data(), cptr, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.c2r = fftw_plan_dft_c2r_1d(ni, cptr, re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p.r2c || !p.c2r) throw std::runtime_error("fftw plan creation failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void forward(std::span<const double> x, std::span<Complex> out) {
  const std::size_t n = x.size();
  if (out.size() != n / 2 + 1) throw std::invalid_argument("fft::forward: output size");
  const Plans& p = cache().get(n);
  // r2c does not modify its input, but the FFTW signature is non-const.
  fftw_execute_dft_r2c(p.r2c, const_cast<double*>(x.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

std::vector<Complex> forward(std::span<const double> x) {
  std::vector<Complex> out(x.size() / 2 + 1);
  forward(x, out);
  return out;
}

void inverse(std::span<const Complex> c, std::span<double> out) {
  const std::size_t n = out.size();
  if (c.size() != n / 2 + 1) throw std::invalid_argument("fft::inverse: input size");
  const Plans& p = cache().get(n);
  std::vector<Complex> work(c.begin(), c.end());  // c2r destroys its input
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(work.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
}

std::vector<double> inverse(std::span<const Complex> c, std::size_t n) {
  std::vector<double> out(n);
  inverse(c, out);
  return out;
}

}  // namespace mflda::fft
