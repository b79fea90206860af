#include <cmath>

#include "noisecodec/mathfn.hpp"
#include "noisecodec/ops.hpp"

namespace nc {

namespace {

using detail::Node;
using detail::grad_enabled;
using detail::new_node;

template <typename T>
void check_binary_shapes(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() == b.shape()) return;
  if (a.numel() == 1 || b.numel() == 1) return;
  fail_shape(op, "shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

// f(a_i, b_i) with scalar broadcast on either side. dfa/dfb map
// (a, b, out_grad) -> input gradient contribution.
template <typename T, class F, class Dfa, class Dfb>
Tensor<T> binary_op(const char* name, const Tensor<T>& a, const Tensor<T>& b,
                    F f, Dfa dfa, Dfb dfb) {
  check_binary_shapes(name, a, b);
  const bool as = a.numel() == 1 && b.numel() != 1;
  const bool bs = b.numel() == 1 && a.numel() != 1;
  const Shape out_shape = as ? b.shape() : a.shape();
  const int64_t n = out_shape.numel();
  const T* av = a.data().data();
  const T* bv = b.data().data();
  std::vector<T> value(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) value[i] = f(av[as ? 0 : i], bv[bs ? 0 : i]);

  auto out = new_node<T>(out_shape, std::move(value));
  if (grad_enabled() && (a.requires_grad() || b.requires_grad())) {
    out->needs_grad = true;
    out->parents = {a.node(), b.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    Node<T>* pb = b.node().get();
    out->backward = [self, pa, pb, as, bs, n, dfa, dfb]() {
      const T* g = self->grad.data();
      const T* av2 = pa->value.data();
      const T* bv2 = pb->value.data();
      if (pa->needs_grad) {
        T* ga = pa->grad_data();
        if (as) {
          double acc = 0;
          for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(dfa(av2[0], bv2[bs ? 0 : i], g[i]));
          ga[0] += static_cast<T>(acc);
        } else {
          for (int64_t i = 0; i < n; ++i) ga[i] += dfa(av2[i], bv2[bs ? 0 : i], g[i]);
        }
      }
      if (pb->needs_grad) {
        T* gb = pb->grad_data();
        if (bs) {
          double acc = 0;
          for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(dfb(av2[as ? 0 : i], bv2[0], g[i]));
          gb[0] += static_cast<T>(acc);
        } else {
          for (int64_t i = 0; i < n; ++i) gb[i] += dfb(av2[as ? 0 : i], bv2[i], g[i]);
        }
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T, class F, class Df>
Tensor<T> unary_op(const Tensor<T>& a, F f, Df df) {
  const int64_t n = a.numel();
  const T* av = a.data().data();
  std::vector<T> value(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) value[i] = f(av[i]);

  auto out = new_node<T>(a.shape(), std::move(value));
  if (grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, n, df]() {
      const T* g = self->grad.data();
      const T* av2 = pa->value.data();
      const T* ov = self->value.data();
      T* ga = pa->grad_data();
      for (int64_t i = 0; i < n; ++i) ga[i] += df(av2[i], ov[i], g[i]);
    };
  }
  return Tensor<T>::from_node(out);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "add", a, b, [](T x, T y) { return x + y; },
      [](T, T, T g) { return g; }, [](T, T, T g) { return g; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "sub", a, b, [](T x, T y) { return x - y; },
      [](T, T, T g) { return g; }, [](T, T, T g) { return T(-g); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T, T y, T g) { return g * y; }, [](T x, T, T g) { return g * x; });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op<T>(
      "div", a, b, [](T x, T y) { return x / y; },
      [](T, T y, T g) { return g / y; },
      [](T x, T y, T g) { return T(-g * x / (y * y)); });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
  return unary_op<T>(
      a, [c](T x) { return x + c; }, [](T, T, T g) { return g; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  return unary_op<T>(
      a, [c](T x) { return x * c; }, [c](T, T, T g) { return g * c; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return scale(a, T(-1));
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary_op<T>(
      a, [slope](T x) { return x >= T(0) ? x : slope * x; },
      [slope](T x, T, T g) { return x >= T(0) ? g : slope * g; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary_op<T>(
      a,
      [](T x) {
        double v = 1.0 / (1.0 + std::exp(-static_cast<double>(x)));
        return static_cast<T>(v);
      },
      [](T, T o, T g) { return g * o * (T(1) - o); });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return x < T(0) ? T(-x) : x; },
      [](T x, T, T g) { return x > T(0) ? g : (x < T(0) ? T(-g) : T(0)); });
}

template <typename T>
Tensor<T> tanh_op(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return static_cast<T>(std::tanh(static_cast<double>(x))); },
      [](T, T o, T g) { return g * (T(1) - o * o); });
}

template <typename T>
Tensor<T> log_op(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return static_cast<T>(std::log(static_cast<double>(x))); },
      [](T x, T, T g) { return g / x; });
}

template <typename T>
Tensor<T> exp_op(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return static_cast<T>(std::exp(static_cast<double>(x))); },
      [](T, T o, T g) { return g * o; });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return static_cast<T>(math::softplus(static_cast<double>(x))); },
      [](T x, T, T g) {
        double s = 1.0 / (1.0 + std::exp(-static_cast<double>(x)));
        return static_cast<T>(g * s);
      });
}

template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& a, T p) {
  return unary_op<T>(
      a,
      [p](T x) { return static_cast<T>(std::pow(static_cast<double>(x), static_cast<double>(p))); },
      [p](T x, T, T g) {
        double d = static_cast<double>(p) *
                   std::pow(static_cast<double>(x), static_cast<double>(p) - 1.0);
        return static_cast<T>(g * d);
      });
}

template <typename T>
Tensor<T> normal_cdf(const Tensor<T>& a) {
  return unary_op<T>(
      a, [](T x) { return static_cast<T>(math::normal_cdf(static_cast<double>(x))); },
      [](T x, T, T g) { return static_cast<T>(g * math::normal_pdf(static_cast<double>(x))); });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  if (!(lo <= hi)) fail_shape("clamp", "lo > hi");
  return unary_op<T>(
      a, [lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](T x, T, T g) { return (x > lo && x < hi) ? g : T(0); });
}

template <typename T>
Tensor<T> lower_bound(const Tensor<T>& a, T bound) {
  return unary_op<T>(
      a, [bound](T x) { return x < bound ? bound : x; },
      [bound](T x, T, T g) { return (x >= bound || g < T(0)) ? g : T(0); });
}

template <typename T>
Tensor<T> round_nograd(const Tensor<T>& a) {
  const int64_t n = a.numel();
  const T* av = a.data().data();
  std::vector<T> value(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    value[i] = static_cast<T>(std::round(static_cast<double>(av[i])));
  return Tensor<T>::from_node(detail::new_node<T>(a.shape(), std::move(value)));
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  const int64_t n = a.numel();
  const T* av = a.data().data();
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(av[i]);
  auto out = detail::new_node<T>(Shape{1, 1, 1, 1}, {static_cast<T>(acc)});
  if (detail::grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, n]() {
      T g = self->grad[0];
      T* ga = pa->grad_data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g;
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  const int64_t n = a.numel();
  if (n == 0) fail_shape("mean", "empty tensor");
  const T* av = a.data().data();
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(av[i]);
  auto out = detail::new_node<T>(Shape{1, 1, 1, 1}, {static_cast<T>(acc / n)});
  if (detail::grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, n]() {
      T g = static_cast<T>(static_cast<double>(self->grad[0]) / n);
      T* ga = pa->grad_data();
      for (int64_t i = 0; i < n; ++i) ga[i] += g;
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> bias_channels(const Tensor<T>& a, const Tensor<T>& bias) {
  const Shape s = a.shape();
  if (bias.shape() != Shape{1, s.c, 1, 1})
    fail_shape("bias_channels", "bias shape " + bias.shape().str() +
                                    " does not match channels of " + s.str());
  const int64_t n = a.numel(), hw = s.h * s.w, chw = s.c * hw;
  const T* av = a.data().data();
  const T* bv = bias.data().data();
  std::vector<T> value(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) value[i] = av[i] + bv[(i % chw) / hw];

  auto out = new_node<T>(s, std::move(value));
  if (grad_enabled() && (a.requires_grad() || bias.requires_grad())) {
    out->needs_grad = true;
    out->parents = {a.node(), bias.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    Node<T>* pb = bias.node().get();
    out->backward = [self, pa, pb, n, hw, chw]() {
      const T* g = self->grad.data();
      if (pa->needs_grad) {
        T* ga = pa->grad_data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (pb->needs_grad) {
        T* gb = pb->grad_data();
        const int64_t nc_ = chw / hw;
        for (int64_t c = 0; c < nc_; ++c) {
          double acc = 0;
          for (int64_t b = 0; b * chw < n; ++b) {
            const T* gp = g + b * chw + c * hw;
            for (int64_t i = 0; i < hw; ++i) acc += static_cast<double>(gp[i]);
          }
          gb[c] += static_cast<T>(acc);
        }
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> scale_channels(const Tensor<T>& a, const Tensor<T>& s) {
  const Shape sh = a.shape();
  if (s.shape() != Shape{1, sh.c, 1, 1})
    fail_shape("scale_channels", "factor shape " + s.shape().str() +
                                     " does not match channels of " + sh.str());
  const int64_t n = a.numel(), hw = sh.h * sh.w, chw = sh.c * hw;
  const T* av = a.data().data();
  const T* sv = s.data().data();
  std::vector<T> value(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) value[i] = av[i] * sv[(i % chw) / hw];

  auto out = new_node<T>(sh, std::move(value));
  if (grad_enabled() && (a.requires_grad() || s.requires_grad())) {
    out->needs_grad = true;
    out->parents = {a.node(), s.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    Node<T>* ps = s.node().get();
    out->backward = [self, pa, ps, n, hw, chw]() {
      const T* g = self->grad.data();
      const T* av2 = pa->value.data();
      const T* sv2 = ps->value.data();
      if (pa->needs_grad) {
        T* ga = pa->grad_data();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * sv2[(i % chw) / hw];
      }
      if (ps->needs_grad) {
        T* gs = ps->grad_data();
        const int64_t nc_ = chw / hw;
        for (int64_t c = 0; c < nc_; ++c) {
          double acc = 0;
          for (int64_t b = 0; b * chw < n; ++b) {
            const T* gp = g + b * chw + c * hw;
            const T* ap = av2 + b * chw + c * hw;
            for (int64_t i = 0; i < hw; ++i)
              acc += static_cast<double>(gp[i]) * static_cast<double>(ap[i]);
          }
          gs[c] += static_cast<T>(acc);
        }
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape sa = a.shape(), sb = b.shape();
  if (sa.b != sb.b || sa.h != sb.h || sa.w != sb.w)
    fail_shape("concat_channels", sa.str() + " vs " + sb.str());
  const Shape so{sa.b, sa.c + sb.c, sa.h, sa.w};
  const int64_t hw = sa.h * sa.w;
  const int64_t ac = sa.c * hw, bc = sb.c * hw;
  std::vector<T> value(static_cast<size_t>(so.numel()));
  const T* av = a.data().data();
  const T* bv = b.data().data();
  for (int64_t n = 0; n < sa.b; ++n) {
    std::copy(av + n * ac, av + (n + 1) * ac, value.begin() + n * (ac + bc));
    std::copy(bv + n * bc, bv + (n + 1) * bc, value.begin() + n * (ac + bc) + ac);
  }
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && (a.requires_grad() || b.requires_grad())) {
    out->needs_grad = true;
    out->parents = {a.node(), b.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    Node<T>* pb = b.node().get();
    const int64_t nb = sa.b;
    out->backward = [self, pa, pb, nb, ac, bc]() {
      const T* g = self->grad.data();
      if (pa->needs_grad) {
        T* ga = pa->grad_data();
        for (int64_t n = 0; n < nb; ++n)
          for (int64_t i = 0; i < ac; ++i) ga[n * ac + i] += g[n * (ac + bc) + i];
      }
      if (pb->needs_grad) {
        T* gb = pb->grad_data();
        for (int64_t n = 0; n < nb; ++n)
          for (int64_t i = 0; i < bc; ++i) gb[n * bc + i] += g[n * (ac + bc) + ac + i];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, int64_t c0, int64_t c1) {
  const Shape s = a.shape();
  if (c0 < 0 || c1 > s.c || c0 >= c1)
    fail_shape("slice_channels", "bad channel range [" + std::to_string(c0) + "," +
                                     std::to_string(c1) + ") for " + s.str());
  const Shape so{s.b, c1 - c0, s.h, s.w};
  const int64_t hw = s.h * s.w, in_c = s.c * hw, out_c = so.c * hw;
  std::vector<T> value(static_cast<size_t>(so.numel()));
  const T* av = a.data().data();
  for (int64_t n = 0; n < s.b; ++n)
    std::copy(av + n * in_c + c0 * hw, av + n * in_c + c1 * hw,
              value.begin() + n * out_c);
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    const int64_t nb = s.b, off = c0 * hw;
    out->backward = [self, pa, nb, in_c, out_c, off]() {
      const T* g = self->grad.data();
      T* ga = pa->grad_data();
      for (int64_t n = 0; n < nb; ++n)
        for (int64_t i = 0; i < out_c; ++i) ga[n * in_c + off + i] += g[n * out_c + i];
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& a) {
  const Shape s = a.shape();
  if (s.h < 2 || s.w < 2) fail_shape("avg_pool2", "spatial extent < 2: " + s.str());
  const Shape so{s.b, s.c, s.h / 2, s.w / 2};
  std::vector<T> value(static_cast<size_t>(so.numel()));
  const T* av = a.data().data();
  const int64_t planes = s.b * s.c;
  for (int64_t p = 0; p < planes; ++p) {
    const T* in = av + p * s.h * s.w;
    T* outp = value.data() + p * so.h * so.w;
    for (int64_t y = 0; y < so.h; ++y)
      for (int64_t x = 0; x < so.w; ++x) {
        const T* r0 = in + (2 * y) * s.w + 2 * x;
        const T* r1 = r0 + s.w;
        outp[y * so.w + x] = static_cast<T>((r0[0] + r0[1] + r1[0] + r1[1]) * T(0.25));
      }
  }
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, s, so, planes]() {
      const T* g = self->grad.data();
      T* ga = pa->grad_data();
      for (int64_t p = 0; p < planes; ++p) {
        const T* gp = g + p * so.h * so.w;
        T* gi = ga + p * s.h * s.w;
        for (int64_t y = 0; y < so.h; ++y)
          for (int64_t x = 0; x < so.w; ++x) {
            T q = gp[y * so.w + x] * T(0.25);
            gi[(2 * y) * s.w + 2 * x] += q;
            gi[(2 * y) * s.w + 2 * x + 1] += q;
            gi[(2 * y + 1) * s.w + 2 * x] += q;
            gi[(2 * y + 1) * s.w + 2 * x + 1] += q;
          }
      }
    };
  }
  return Tensor<T>::from_node(out);
}

namespace {

// Reflection without edge repetition, bouncing for large offsets.
std::vector<int64_t> reflect_map(int64_t extent, int64_t padded) {
  std::vector<int64_t> map(static_cast<size_t>(padded));
  const int64_t period = 2 * extent - 2;
  for (int64_t i = 0; i < padded; ++i) {
    if (extent == 1) {
      map[static_cast<size_t>(i)] = 0;
    } else {
      const int64_t j = i % period;
      map[static_cast<size_t>(i)] = j < extent ? j : period - j;
    }
  }
  return map;
}

}  // namespace

template <typename T>
Tensor<T> pad_reflect_hw(const Tensor<T>& a, int64_t ph, int64_t pw) {
  const Shape s = a.shape();
  if (ph < 0 || pw < 0) fail_shape("pad_reflect_hw", "negative pad");
  if (ph == 0 && pw == 0) return a;
  const Shape so{s.b, s.c, s.h + ph, s.w + pw};
  const auto ry = reflect_map(s.h, so.h);
  const auto rx = reflect_map(s.w, so.w);
  std::vector<T> value(static_cast<size_t>(so.numel()));
  const T* av = a.data().data();
  const int64_t planes = s.b * s.c;
  for (int64_t p = 0; p < planes; ++p) {
    const T* in = av + p * s.h * s.w;
    T* outp = value.data() + p * so.h * so.w;
    for (int64_t y = 0; y < so.h; ++y)
      for (int64_t x = 0; x < so.w; ++x) outp[y * so.w + x] = in[ry[y] * s.w + rx[x]];
  }
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, s, so, planes, ry, rx]() {
      const T* g = self->grad.data();
      T* ga = pa->grad_data();
      for (int64_t p = 0; p < planes; ++p) {
        const T* gp = g + p * so.h * so.w;
        T* gi = ga + p * s.h * s.w;
        for (int64_t y = 0; y < so.h; ++y)
          for (int64_t x = 0; x < so.w; ++x) gi[ry[y] * s.w + rx[x]] += gp[y * so.w + x];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

template <typename T>
Tensor<T> crop_hw(const Tensor<T>& a, int64_t h, int64_t w) {
  const Shape s = a.shape();
  if (h < 1 || w < 1 || h > s.h || w > s.w)
    fail_shape("crop_hw", "window (" + std::to_string(h) + "," + std::to_string(w) +
                              ") outside " + s.str());
  if (h == s.h && w == s.w) return a;
  const Shape so{s.b, s.c, h, w};
  std::vector<T> value(static_cast<size_t>(so.numel()));
  const T* av = a.data().data();
  const int64_t planes = s.b * s.c;
  for (int64_t p = 0; p < planes; ++p) {
    const T* in = av + p * s.h * s.w;
    T* outp = value.data() + p * h * w;
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) outp[y * w + x] = in[y * s.w + x];
  }
  auto out = new_node<T>(so, std::move(value));
  if (grad_enabled() && a.requires_grad()) {
    out->needs_grad = true;
    out->parents = {a.node()};
    Node<T>* self = out.get();
    Node<T>* pa = a.node().get();
    out->backward = [self, pa, s, h, w, planes]() {
      const T* g = self->grad.data();
      T* ga = pa->grad_data();
      for (int64_t p = 0; p < planes; ++p) {
        const T* gp = g + p * h * w;
        T* gi = ga + p * s.h * s.w;
        for (int64_t y = 0; y < h; ++y)
          for (int64_t x = 0; x < w; ++x) gi[y * s.w + x] += gp[y * w + x];
      }
    };
  }
  return Tensor<T>::from_node(out);
}

#define NC_INSTANTIATE(T)                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                      \
  template Tensor<T> scale(const Tensor<T>&, T);                           \
  template Tensor<T> neg(const Tensor<T>&);                                \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                      \
  template Tensor<T> sigmoid(const Tensor<T>&);                            \
  template Tensor<T> abs(const Tensor<T>&);                                \
  template Tensor<T> tanh_op(const Tensor<T>&);                            \
  template Tensor<T> log_op(const Tensor<T>&);                             \
  template Tensor<T> exp_op(const Tensor<T>&);                             \
  template Tensor<T> softplus(const Tensor<T>&);                           \
  template Tensor<T> pow_scalar(const Tensor<T>&, T);                      \
  template Tensor<T> normal_cdf(const Tensor<T>&);                         \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                        \
  template Tensor<T> lower_bound(const Tensor<T>&, T);                     \
  template Tensor<T> round_nograd(const Tensor<T>&);                       \
  template Tensor<T> sum(const Tensor<T>&);                                \
  template Tensor<T> mean(const Tensor<T>&);                               \
  template Tensor<T> bias_channels(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> scale_channels(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);  \
  template Tensor<T> slice_channels(const Tensor<T>&, int64_t, int64_t);   \
  template Tensor<T> avg_pool2(const Tensor<T>&);                          \
  template Tensor<T> pad_reflect_hw(const Tensor<T>&, int64_t, int64_t);   \
  template Tensor<T> crop_hw(const Tensor<T>&, int64_t, int64_t);

NC_INSTANTIATE(float)
NC_INSTANTIATE(double)
#undef NC_INSTANTIATE

}  // namespace nc
