#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

// Thin wrappers around FFTW real transforms. Plans are cached per size and
// shared between threads; execution uses the new-array interface.
namespace mflda::fft {

using Complex = std::complex<double>;

/// Unnormalized forward transform: c_k = sum_j x_j exp(-2 pi i j k / n), k = 0..n/2.
std::vector<Complex> forward(std::span<const double> x);
void forward(std::span<const double> x, std::span<Complex> out);

/// Inverse of forward(), including the 1/n factor.
std::vector<double> inverse(std::span<const Complex> c, std::size_t n);
void inverse(std::span<const Complex> c, std::span<double> out);

}  // namespace mflda::fft
