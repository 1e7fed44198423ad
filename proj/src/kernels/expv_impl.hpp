// Included inside a per-variant namespace after `matvec` has been defined
// there. Requires <cmath> and <algorithm> to be included beforehand.

inline double one_norm(const SplitMatrix& h) {
  double best = 0.0;
  for (int k = 0; k < h.n; ++k) {
    double col = 0.0;
    for (int j = 0; j < h.n; ++j) col += std::hypot(h.re[k * h.ld + j], h.im[k * h.ld + j]);
    best = std::max(best, col);
  }
  return best;
}

inline int expv_taylor(const SplitMatrix& h, double scale, SplitVector& v) {
  constexpr double kTermTol = 0x1p-60;
  constexpr int kMaxTerms = 40;
  const double norm = std::abs(scale) * one_norm(h);
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 0.5)));
  const double c = scale / substeps;
  int products = 0;
  SplitVector term = v;
  SplitVector hx;
  hx.n = v.n;
  for (int s = 0; s < substeps; ++s) {
    term = v;
    double acc_max = 0.0;
    for (int j = 0; j < v.n; ++j) acc_max = std::max(acc_max, std::max(std::abs(v.re[j]), std::abs(v.im[j])));
    for (int k = 1; k <= kMaxTerms; ++k) {
      matvec(h, term, hx);
      ++products;
      const double f = c / k;
      double term_max = 0.0;
      for (int j = 0; j < v.n; ++j) {
        // -i * f * (a + ib) = f*b - i*f*a
        const double tr = f * hx.im[j];
        const double ti = -f * hx.re[j];
        term.re[j] = tr;
        term.im[j] = ti;
        v.re[j] += tr;
        v.im[j] += ti;
        term_max = std::max(term_max, std::max(std::abs(tr), std::abs(ti)));
      }
      if (term_max <= kTermTol * acc_max) break;
    }
  }
  return products;
}
