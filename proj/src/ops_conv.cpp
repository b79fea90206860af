#include <vector>

#include "noisecodec/ops.hpp"
#include "noisecodec/threads.hpp"

namespace nc {

namespace {

using detail::Node;
using detail::grad_enabled;
using detail::new_node;

struct ConvGeom {
  int64_t cin, cout, kh, kw, h, w, oh, ow, stride, pad, groups;
  int64_t cols() const { return (cin / groups) * kh * kw; }  // K per group
  int64_t n() const { return oh * ow; }
};

// Column index bounds [lo, hi] of the output axis for which the tap at
// kernel offset k stays inside [0, extent).
void tap_bounds(int64_t out, int64_t extent, int64_t stride, int64_t pad,
                int64_t k, int64_t& lo, int64_t& hi) {
  lo = 0;
  while (lo < out && lo * stride - pad + k < 0) ++lo;
  hi = out - 1;
  while (hi >= 0 && hi * stride - pad + k >= extent) --hi;
}

// col is (C*kh*kw, oh*ow) for one sample plane group of C channels.
template <typename T>
void im2col(const T* in, int64_t C, const ConvGeom& g, T* col) {
  const int64_t N = g.n();
  for (int64_t c = 0; c < C; ++c) {
    const T* plane = in + c * g.h * g.w;
    for (int64_t ky = 0; ky < g.kh; ++ky)
      for (int64_t kx = 0; kx < g.kw; ++kx) {
        T* row = col + ((c * g.kh + ky) * g.kw + kx) * N;
        int64_t xlo, xhi;
        tap_bounds(g.ow, g.w, g.stride, g.pad, kx, xlo, xhi);
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.ow, T(0));
            continue;
          }
          std::fill(dst, dst + std::min(xlo, g.ow), T(0));
          const T* src = plane + iy * g.w;
          const int64_t off = kx - g.pad;
          for (int64_t ox = xlo; ox <= xhi; ++ox) dst[ox] = src[ox * g.stride + off];
          if (xhi + 1 < g.ow) std::fill(dst + xhi + 1, dst + g.ow, T(0));
        }
      }
  }
}

// Adjoint of im2col: scatter-add columns back into the input plane.
template <typename T>
void col2im(const T* col, int64_t C, const ConvGeom& g, T* in) {
  const int64_t N = g.n();
  for (int64_t c = 0; c < C; ++c) {
    T* plane = in + c * g.h * g.w;
    for (int64_t ky = 0; ky < g.kh; ++ky)
      for (int64_t kx = 0; kx < g.kw; ++kx) {
        const T* row = col + ((c * g.kh + ky) * g.kw + kx) * N;
        int64_t xlo, xhi;
        tap_bounds(g.ow, g.w, g.stride, g.pad, kx, xlo, xhi);
        for (int64_t oy = 0; oy < g.oh; ++oy) {
          const int64_t iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + oy * g.ow;
          T* dst = plane + iy * g.w;
          const int64_t off = kx - g.pad;
          for (int64_t ox = xlo; ox <= xhi; ++ox) dst[ox * g.stride + off] += src[ox];
        }
      }
  }
}

// C(M,N) += A(M,K) * B(K,N), all row-major.
template <typename T>
void gemm_nn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t m = 0; m < M; ++m) {
    T* crow = C + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      const T* brow = B + k * N;
      for (int64_t n = 0; n < N; ++n) crow[n] += a * brow[n];
    }
  }
}

// C(K,N) += A(M,K)^T * B(M,N).
template <typename T>
void gemm_tn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t m = 0; m < M; ++m) {
    const T* brow = B + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      T* crow = C + k * N;
      for (int64_t n = 0; n < N; ++n) crow[n] += a * brow[n];
    }
  }
}

// C(M,K) += A(M,N) * B(K,N)^T, dot products accumulated in double.
template <typename T>
void gemm_nt(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t m = 0; m < M; ++m) {
    const T* arow = A + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const T* brow = B + k * N;
      double acc = 0;
      for (int64_t n = 0; n < N; ++n) acc += static_cast<double>(arow[n]) * brow[n];
      C[m * K + k] += static_cast<T>(acc);
    }
  }
}

template <typename T>
ConvGeom conv_geom(const Tensor<T>& input, const Tensor<T>& kernel,
                   int64_t stride, int64_t padding, int64_t groups) {
  const Shape si = input.shape(), sk = kernel.shape();
  if (stride < 1 || padding < 0 || groups < 1)
    fail_shape("conv2d", "bad stride/padding/groups");
  if (sk.b % groups != 0 || si.c != sk.c * groups)
    fail_shape("conv2d", "kernel " + sk.str() + " incompatible with input " +
                             si.str() + " at groups=" + std::to_string(groups));
  ConvGeom g{si.c, sk.b, sk.h, sk.w, si.h, si.w, 0, 0, stride, padding, groups};
  if (si.h + 2 * padding < sk.h || si.w + 2 * padding < sk.w)
    fail_shape("conv2d", "kernel larger than padded input");
  g.oh = (si.h + 2 * padding - sk.h) / stride + 1;
  g.ow = (si.w + 2 * padding - sk.w) / stride + 1;
  return g;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                 const Tensor<T>* bias, int64_t stride, int64_t padding,
                 int64_t groups) {
  const ConvGeom g = conv_geom(input, kernel, stride, padding, groups);
  if (bias && bias->shape() != Shape{1, g.cout, 1, 1})
    fail_shape("conv2d", "bias shape " + bias->shape().str());
  check_finite(input.data().data(), input.numel(), "conv2d");
  const Shape si = input.shape();
  const Shape so{si.b, g.cout, g.oh, g.ow};
  const int64_t K = g.cols(), N = g.n();
  const int64_t cg = g.cin / g.groups, mg = g.cout / g.groups;

  std::vector<T> value(static_cast<size_t>(so.numel()), T(0));
  const T* in = input.data().data();
  const T* kw = kernel.data().data();
  const T* bv = bias ? bias->data().data() : nullptr;
  parallel_for(si.b, [&](int64_t b) {
    std::vector<T> col(static_cast<size_t>(K * N));
    const T* xb = in + b * si.c * si.h * si.w;
    T* yb = value.data() + b * g.cout * N;
    for (int64_t grp = 0; grp < g.groups; ++grp) {
      im2col(xb + grp * cg * si.h * si.w, cg, g, col.data());
      gemm_nn(kw + grp * mg * K, col.data(), yb + grp * mg * N, mg, K, N);
    }
    if (bv)
      for (int64_t m = 0; m < g.cout; ++m)
        for (int64_t n = 0; n < N; ++n) yb[m * N + n] += bv[m];
  });

  auto out = new_node<T>(so, std::move(value));
  const bool need = grad_enabled() &&
                    (input.requires_grad() || kernel.requires_grad() ||
                     (bias && bias->requires_grad()));
  if (need) {
    out->needs_grad = true;
    out->parents = {input.node(), kernel.node()};
    if (bias) out->parents.push_back(bias->node());
    Node<T>* self = out.get();
    Node<T>* pi = input.node().get();
    Node<T>* pk = kernel.node().get();
    Node<T>* pb = bias ? bias->node().get() : nullptr;
    const int64_t nb = si.b, cin_hw = si.c * si.h * si.w;
    out->backward = [self, pi, pk, pb, g, nb, cin_hw, K, N, cg, mg]() {
      const T* gout = self->grad.data();
      const T* in2 = pi->value.data();
      const T* kw2 = pk->value.data();
      const bool gi = pi->needs_grad, gk = pk->needs_grad;
      const bool gb = pb && pb->needs_grad;
      T* din = gi ? pi->grad_data() : nullptr;
      std::vector<T> dkpart(gk ? static_cast<size_t>(nb * g.cout * K) : 0, T(0));
      std::vector<T> dbpart(gb ? static_cast<size_t>(nb * g.cout) : 0, T(0));
      parallel_for(nb, [&](int64_t b) {
        std::vector<T> col(static_cast<size_t>(K * N));
        const T* gb_out = gout + b * g.cout * N;
        for (int64_t grp = 0; grp < g.groups; ++grp) {
          const T* gg = gb_out + grp * mg * N;
          if (gk) {
            im2col(in2 + b * cin_hw + grp * cg * g.h * g.w, cg, g, col.data());
            gemm_nt(gg, col.data(), dkpart.data() + (b * g.groups + grp) * mg * K,
                    mg, K, N);
          }
          if (gi) {
            std::fill(col.begin(), col.end(), T(0));
            gemm_tn(kw2 + grp * mg * K, gg, col.data(), mg, K, N);
            col2im(col.data(), cg, g, din + b * cin_hw + grp * cg * g.h * g.w);
          }
        }
        if (gb) {
          T* dbp = dbpart.data() + b * g.cout;
          for (int64_t m = 0; m < g.cout; ++m) {
            double acc = 0;
            for (int64_t n = 0; n < N; ++n) acc += static_cast<double>(gb_out[m * N + n]);
            dbp[m] = static_cast<T>(acc);
          }
        }
      });
      if (gk) {
        T* dk = pk->grad_data();
        for (int64_t b = 0; b < nb; ++b)
          for (int64_t i = 0; i < g.cout * K; ++i) dk[i] += dkpart[b * g.cout * K + i];
      }
      if (gb) {
        T* db = pb->grad_data();
        for (int64_t b = 0; b < nb; ++b)
          for (int64_t m = 0; m < g.cout; ++m) db[m] += dbpart[b * g.cout + m];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& input, const Tensor<T>& kernel,
                           int64_t stride, int64_t padding) {
  const Shape si = input.shape(), sk = kernel.shape();
  if (stride < 1 || padding < 0) fail_shape("conv2d_transpose", "bad stride/padding");
  if (si.c != sk.b)
    fail_shape("conv2d_transpose",
               "kernel " + sk.str() + " incompatible with input " + si.str());
  const int64_t oh = (si.h - 1) * stride - 2 * padding + sk.h;
  const int64_t ow = (si.w - 1) * stride - 2 * padding + sk.w;
  if (oh < 1 || ow < 1) fail_shape("conv2d_transpose", "empty output");
  check_finite(input.data().data(), input.numel(), "conv2d_transpose");

  // The equivalent forward conv maps (Cout, oh, ow) -> (Cin, h, w); reuse its
  // geometry with the roles of input and output swapped.
  ConvGeom g{sk.c, si.c, sk.h, sk.w, oh, ow, si.h, si.w, stride, padding, 1};
  const int64_t K = g.cols(), N = g.n();  // K = Cout*kh*kw, N = h*w of input
  const int64_t M = si.c;

  std::vector<T> value(static_cast<size_t>(si.b * sk.c * oh * ow), T(0));
  const T* in = input.data().data();
  const T* kw = kernel.data().data();
  parallel_for(si.b, [&](int64_t b) {
    std::vector<T> col(static_cast<size_t>(K * N), T(0));
    gemm_tn(kw, in + b * M * N, col.data(), M, K, N);
    col2im(col.data(), sk.c, g, value.data() + b * sk.c * oh * ow);
  });

  const Shape so{si.b, sk.c, oh, ow};
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && (input.requires_grad() || kernel.requires_grad())) {
    out->needs_grad = true;
    out->parents = {input.node(), kernel.node()};
    Node<T>* self = out.get();
    Node<T>* pi = input.node().get();
    Node<T>* pk = kernel.node().get();
    const int64_t nb = si.b, out_chw = sk.c * oh * ow;
    out->backward = [self, pi, pk, g, nb, out_chw, K, N, M]() {
      const T* gout = self->grad.data();
      const T* in2 = pi->value.data();
      const T* kw2 = pk->value.data();
      const bool gi = pi->needs_grad, gk = pk->needs_grad;
      T* din = gi ? pi->grad_data() : nullptr;
      std::vector<T> dkpart(gk ? static_cast<size_t>(nb * M * K) : 0, T(0));
      parallel_for(nb, [&](int64_t b) {
        std::vector<T> col(static_cast<size_t>(K * N));
        im2col(gout + b * out_chw, g.cin, g, col.data());
        if (gi) gemm_nn(kw2, col.data(), din + b * M * N, M, K, N);
        if (gk) gemm_nt(in2 + b * M * N, col.data(), dkpart.data() + b * M * K, M, K, N);
      });
      if (gk) {
        T* dk = pk->grad_data();
        for (int64_t b = 0; b < nb; ++b)
          for (int64_t i = 0; i < M * K; ++i) dk[i] += dkpart[b * M * K + i];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> raster_mask(int64_t kh, int64_t kw, MaskType) {
  if (kh < 1 || kw < 1 || kh % 2 == 0 || kw % 2 == 0)
    fail_shape("raster_mask", "extents must be odd and positive");
  std::vector<T> m(static_cast<size_t>(kh * kw), T(0));
  const int64_t center = (kh / 2) * kw + kw / 2;
  for (int64_t i = 0; i < center; ++i) m[i] = T(1);
  return Tensor<T>::from_data(Shape{1, 1, kh, kw}, m);
}

template <typename T>
Tensor<T> masked_conv2d(const Tensor<T>& input, const Tensor<T>& kernel,
                        MaskType type) {
  const Shape sk = kernel.shape();
  if (sk.h % 2 == 0 || sk.w % 2 == 0 || sk.h != sk.w)
    fail_shape("masked_conv2d", "kernel must be odd and square, got " + sk.str());
  Tensor<T> mask = raster_mask<T>(sk.h, sk.w, type);
  // Broadcast the (1,1,kH,kW) mask over all kernel filters.
  const T* mv = mask.data().data();
  const T* kv = kernel.data().data();
  std::vector<T> masked(static_cast<size_t>(sk.numel()));
  const int64_t planes = sk.b * sk.c, hw = sk.h * sk.w;
  for (int64_t p = 0; p < planes; ++p)
    for (int64_t i = 0; i < hw; ++i) masked[p * hw + i] = kv[p * hw + i] * mv[i];

  auto mk = new_node<T>(sk, std::move(masked));
  if (detail::grad_enabled() && kernel.requires_grad()) {
    mk->needs_grad = true;
    mk->parents = {kernel.node()};
    Node<T>* self = mk.get();
    Node<T>* pk = kernel.node().get();
    std::vector<T> mcopy(mv, mv + hw);
    mk->backward = [self, pk, planes, hw, mcopy]() {
      const T* g = self->grad.data();
      T* dk = pk->grad_data();
      for (int64_t p = 0; p < planes; ++p)
        for (int64_t i = 0; i < hw; ++i) dk[p * hw + i] += g[p * hw + i] * mcopy[i];
    };
  }
  return conv2d(input, Tensor<T>::from_node(mk), static_cast<const Tensor<T>*>(nullptr),
                1, (sk.h - 1) / 2, 1);
}

#define NC_INSTANTIATE(T)                                                      \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&,                \
                            const Tensor<T>*, int64_t, int64_t, int64_t);      \
  template Tensor<T> conv2d_transpose(const Tensor<T>&, const Tensor<T>&,      \
                                      int64_t, int64_t);                       \
  template Tensor<T> raster_mask(int64_t, int64_t, MaskType);                  \
  template Tensor<T> masked_conv2d(const Tensor<T>&, const Tensor<T>&, MaskType);

NC_INSTANTIATE(float)
NC_INSTANTIATE(double)
#undef NC_INSTANTIATE

}  // namespace nc
