#ifndef FRACWAVE_DETAIL_FFT_HPP
#define FRACWAVE_DETAIL_FFT_HPP

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <vector>

#include <fftw3.h>

namespace fracwave::detail {

using cplx = std::complex<double>;

// Allocator returning FFTW-aligned storage, so every buffer matches the
// alignment of the arrays the cached plans were created with.
template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const { return true; }
  template <class U>
  bool operator!=(const FftwAllocator<U>&) const { return false; }
};

using CBuffer = std::vector<cplx, FftwAllocator<cplx>>;

// In-place unnormalized 2D complex transform of size n x n (row-major).
// forward: sum_m f_m e^{-2 pi i k.m/n}; backward: sum_k g_k e^{+2 pi i k.m/n}.
// Plans are created once per size under a lock and executed through the
// new-array interface, which is thread safe.
class Fft2 {
public:
  static const Fft2& get(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Fft2>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot.reset(new Fft2(n));
    return *slot;
  }

  int size() const { return n_; }

  void forward(cplx* data) const { fftw_execute_dft(fwd_, as_fftw(data), as_fftw(data)); }
  void backward(cplx* data) const { fftw_execute_dft(bwd_, as_fftw(data), as_fftw(data)); }

  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

private:
  explicit Fft2(int n) : n_(n) {
    CBuffer tmp(std::size_t(n) * n);
    fwd_ = fftw_plan_dft_2d(n, n, as_fftw(tmp.data()), as_fftw(tmp.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(n, n, as_fftw(tmp.data()), as_fftw(tmp.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  static fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

  int n_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

// Signed wavenumber of FFT bin i on an n-point axis; the Nyquist bin maps to +n/2.
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

inline int bin_of(int k, int n) { return ((k % n) + n) % n; }

} // namespace fracwave::detail

#endif
