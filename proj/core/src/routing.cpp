#include "eegcaps/capsnet/routing.hpp"

#include "eegcaps/capsnet/layers.hpp"
#include "eegcaps/error.hpp"

namespace eegcaps::capsnet {

template <typename T>
RoutingResult<T> dynamic_routing(const BasicTensor<T>& u_hat, std::size_t iterations) {
  if (u_hat.rank() != 3) fail(ErrorCode::ShapeMismatch, "u_hat must be [N x J x Dout]");
  if (iterations == 0) fail(ErrorCode::InvalidConfig, "routing needs at least one iteration");
  const std::size_t n = u_hat.dim(0), classes = u_hat.dim(1), dout = u_hat.dim(2);

  RoutingResult<T> result;
  BasicTensor<T> b({n, classes});
  for (std::size_t t = 0; t < iterations; ++t) {
    BasicTensor<T> c = routing_softmax(b);
    BasicTensor<T> s({classes, dout});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < classes; ++j) {
        const T cij = c[i * classes + j];
        const T* u = u_hat.data() + (i * classes + j) * dout;
        T* sj = s.data() + j * dout;
        for (std::size_t d = 0; d < dout; ++d) sj[d] += cij * u[d];
      }
    }
    BasicTensor<T> v({classes, dout});
    for (std::size_t j = 0; j < classes; ++j) {
      squash<T>(std::span<const T>(s.data() + j * dout, dout), std::span<T>(v.data() + j * dout, dout));
    }
    if (t + 1 < iterations) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < classes; ++j) {
          const T* u = u_hat.data() + (i * classes + j) * dout;
          const T* vj = v.data() + j * dout;
          T agreement{0};
          for (std::size_t d = 0; d < dout; ++d) agreement += u[d] * vj[d];
          b[i * classes + j] += agreement;
        }
      }
    }
    result.trace.c.push_back(c);
    result.trace.s.push_back(std::move(s));
    result.trace.v.push_back(v);
    if (t + 1 == iterations) {
      result.v = std::move(v);
      result.final_state.c = std::move(c);
    }
  }
  result.final_state.b = std::move(b);
  return result;
}

template <typename T>
BasicTensor<T> dynamic_routing_backward(const BasicTensor<T>& u_hat, const RoutingTrace<T>& trace,
                                        const BasicTensor<T>& grad_v) {
  const std::size_t n = u_hat.dim(0), classes = u_hat.dim(1), dout = u_hat.dim(2);
  const std::size_t iterations = trace.v.size();
  require_shape(grad_v.shape(), {classes, dout}, "routing grad_v");

  BasicTensor<T> grad_u_hat(u_hat.shape());
  BasicTensor<T> grad_b({n, classes});  // gradient w.r.t. b entering iteration t + 1
  BasicTensor<T> gv({classes, dout});
  BasicTensor<T> gs({classes, dout});
  std::vector<T> gc(classes);

  for (std::size_t step = iterations; step-- > 0;) {
    const auto& c = trace.c[step];
    const auto& s = trace.s[step];
    const auto& v = trace.v[step];
    const bool last = step + 1 == iterations;

    // v_t feeds the agreement update b_{t+1} = b_t + u_hat . v_t.
    if (last) {
      gv = grad_v;
    } else {
      gv.fill(T{0});
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < classes; ++j) {
          const T g = grad_b[i * classes + j];
          const T* u = u_hat.data() + (i * classes + j) * dout;
          const T* vj = v.data() + j * dout;
          T* gvj = gv.data() + j * dout;
          T* gu = grad_u_hat.data() + (i * classes + j) * dout;
          for (std::size_t d = 0; d < dout; ++d) {
            gvj[d] += g * u[d];
            gu[d] += g * vj[d];
          }
        }
      }
    }

    for (std::size_t j = 0; j < classes; ++j) {
      squash_backward<T>(std::span<const T>(s.data() + j * dout, dout),
                         std::span<const T>(gv.data() + j * dout, dout),
                         std::span<T>(gs.data() + j * dout, dout));
    }

    // s_j = sum_i c_ij u_hat_ij, then back through the softmax into b_t.
    for (std::size_t i = 0; i < n; ++i) {
      T weighted{0};
      for (std::size_t j = 0; j < classes; ++j) {
        const T cij = c[i * classes + j];
        const T* u = u_hat.data() + (i * classes + j) * dout;
        const T* gsj = gs.data() + j * dout;
        T* gu = grad_u_hat.data() + (i * classes + j) * dout;
        T dot{0};
        for (std::size_t d = 0; d < dout; ++d) {
          gu[d] += cij * gsj[d];
          dot += u[d] * gsj[d];
        }
        gc[j] = dot;
        weighted += cij * dot;
      }
      for (std::size_t j = 0; j < classes; ++j) {
        grad_b[i * classes + j] += c[i * classes + j] * (gc[j] - weighted);
      }
    }
  }
  return grad_u_hat;
}

template RoutingResult<float> dynamic_routing(const BasicTensor<float>&, std::size_t);
template RoutingResult<double> dynamic_routing(const BasicTensor<double>&, std::size_t);
template BasicTensor<float> dynamic_routing_backward(const BasicTensor<float>&,
                                                     const RoutingTrace<float>&,
                                                     const BasicTensor<float>&);
template BasicTensor<double> dynamic_routing_backward(const BasicTensor<double>&,
                                                      const RoutingTrace<double>&,
                                                      const BasicTensor<double>&);

}  // namespace eegcaps::capsnet
