#include "morl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace morl::ad {

using detail::Node;

namespace {

std::shared_ptr<Node> make_node(Mat value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) {
        n->backward_fn = std::move(backward_fn);
        n->ensure_grad();
    }
    return n;
}

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

} // namespace

Tensor Tensor::constant(Mat value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return Tensor(std::move(n));
}

Tensor Tensor::parameter(Mat value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->name = std::move(name);
    n->ensure_grad();
    return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
    check(loss.defined(), "backward: undefined tensor");
    check(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS over grad-requiring subgraph.
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad.d[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

Tensor matmul(const Tensor& x, const Tensor& w) {
    check(x.cols() == w.rows(), "matmul: inner dimensions differ");
    const std::size_t B = x.rows(), I = x.cols(), O = w.cols();
    Mat out(B, O, 0.0);
    {
        const double* xd = x.value().d.data();
        const double* wd = w.value().d.data();
        double* od = out.d.data();
        for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t k = 0; k < I; ++k) {
                const double xv = xd[i * I + k];
                const double* wrow = wd + k * O;
                double* orow = od + i * O;
                for (std::size_t j = 0; j < O; ++j) orow[j] += xv * wrow[j];
            }
        }
    }
    auto xn = x.node(), wn = w.node();
    return Tensor(make_node(std::move(out), {xn, wn}, [B, I, O](Node& n) {
        Node* xp = n.parents[0].get();
        Node* wp = n.parents[1].get();
        const double* gd = n.grad.d.data();
        if (xp->requires_grad) { // dX += dY . W^T
            xp->ensure_grad();
            const double* wd = wp->value.d.data();
            double* xg = xp->grad.d.data();
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t j = 0; j < O; ++j) {
                    const double g = gd[i * O + j];
                    const double* wrow = wd + j; // column j of W, stride O
                    double* xrow = xg + i * I;
                    for (std::size_t k = 0; k < I; ++k) xrow[k] += g * wrow[k * O];
                }
            }
        }
        if (wp->requires_grad) { // dW += X^T . dY
            wp->ensure_grad();
            const double* xd = xp->value.d.data();
            double* wg = wp->grad.d.data();
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t k = 0; k < I; ++k) {
                    const double xv = xd[i * I + k];
                    const double* grow = gd + i * O;
                    double* wrow = wg + k * O;
                    for (std::size_t j = 0; j < O; ++j) wrow[j] += xv * grow[j];
                }
            }
        }
    }));
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
    check(b.rows() == 1 && b.cols() == x.cols(), "add_bias: bias shape mismatch");
    Mat out = x.value();
    const std::size_t B = x.rows(), O = x.cols();
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < O; ++j) out.d[i * O + j] += b.value().d[j];
    }
    return Tensor(make_node(std::move(out), {x.node(), b.node()}, [B, O](Node& n) {
        Node* xp = n.parents[0].get();
        Node* bp = n.parents[1].get();
        if (xp->requires_grad) {
            xp->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) xp->grad.d[i] += n.grad.d[i];
        }
        if (bp->requires_grad) {
            bp->ensure_grad();
            for (std::size_t i = 0; i < B; ++i) {
                for (std::size_t j = 0; j < O; ++j) bp->grad.d[j] += n.grad.d[i * O + j];
            }
        }
    }));
}

namespace {

Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* what,
                          double (*fwd)(double, double),
                          void (*bwd)(double ga, double av, double bv, double* da, double* db)) {
    check(a.value().same_shape(b.value()), what);
    Mat out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] = fwd(a.value().d[i], b.value().d[i]);
    return Tensor(make_node(std::move(out), {a.node(), b.node()}, [bwd](Node& n) {
        Node* ap = n.parents[0].get();
        Node* bp = n.parents[1].get();
        if (ap->requires_grad) ap->ensure_grad();
        if (bp->requires_grad) bp->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            double da = 0.0, db = 0.0;
            bwd(n.grad.d[i], ap->value.d[i], bp->value.d[i], &da, &db);
            if (ap->requires_grad) ap->grad.d[i] += da;
            if (bp->requires_grad) bp->grad.d[i] += db;
        }
    }));
}

Tensor unary_elementwise(const Tensor& x, double (*fwd)(double),
                         double (*dfdx)(double xv, double yv)) {
    Mat out(x.rows(), x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] = fwd(x.value().d[i]);
    return Tensor(make_node(std::move(out), {x.node()}, [dfdx](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            xp->grad.d[i] += n.grad.d[i] * dfdx(xp->value.d[i], n.value.d[i]);
        }
    }));
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(a, b, "add: shape mismatch",
                              [](double x, double y) { return x + y; },
                              [](double g, double, double, double* da, double* db) {
                                  *da = g;
                                  *db = g;
                              });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(a, b, "sub: shape mismatch",
                              [](double x, double y) { return x - y; },
                              [](double g, double, double, double* da, double* db) {
                                  *da = g;
                                  *db = -g;
                              });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(a, b, "mul: shape mismatch",
                              [](double x, double y) { return x * y; },
                              [](double g, double av, double bv, double* da, double* db) {
                                  *da = g * bv;
                                  *db = g * av;
                              });
}

Tensor scale(const Tensor& x, double c) {
    Mat out(x.rows(), x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] = x.value().d[i] * c;
    return Tensor(make_node(std::move(out), {x.node()}, [c](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) xp->grad.d[i] += n.grad.d[i] * c;
    }));
}

Tensor add_scalar(const Tensor& x, double c) {
    Mat out(x.rows(), x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] = x.value().d[i] + c;
    return Tensor(make_node(std::move(out), {x.node()}, [](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) xp->grad.d[i] += n.grad.d[i];
    }));
}

Tensor exp_(const Tensor& x) {
    return unary_elementwise(x, [](double v) { return std::exp(v); },
                             [](double, double y) { return y; });
}

Tensor tanh_(const Tensor& x) {
    return unary_elementwise(x, [](double v) { return std::tanh(v); },
                             [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
    return unary_elementwise(x, [](double v) { return v > 0.0 ? v : 0.0; },
                             [](double xv, double) { return xv > 0.0 ? 1.0 : 0.0; });
}

Tensor mish(const Tensor& x) {
    return unary_elementwise(
        x, [](double v) { return v * std::tanh(softplus(v)); },
        [](double xv, double) {
            const double t = std::tanh(softplus(xv));
            return t + xv * (1.0 - t * t) * sigmoid(xv);
        });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    Mat out(x.rows(), x.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out.d[i] = std::clamp(x.value().d[i], lo, hi);
    return Tensor(make_node(std::move(out), {x.node()}, [lo, hi](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const double v = xp->value.d[i];
            if (v > lo && v < hi) xp->grad.d[i] += n.grad.d[i];
        }
    }));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    check(!parts.empty(), "concat_cols: empty input");
    const std::size_t B = parts.front().rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        check(p.rows() == B, "concat_cols: row count mismatch");
        total += p.cols();
    }
    Mat out(B, total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t C = p.cols();
        for (std::size_t i = 0; i < B; ++i) {
            std::copy_n(p.value().d.data() + i * C, C, out.d.data() + i * total + off);
        }
        off += C;
    }
    std::vector<std::shared_ptr<Node>> parents;
    parents.reserve(parts.size());
    for (const auto& p : parts) parents.push_back(p.node());
    return Tensor(make_node(std::move(out), std::move(parents), [B, total](Node& n) {
        std::size_t off2 = 0;
        for (auto& pp : n.parents) {
            const std::size_t C = pp->value.cols;
            if (pp->requires_grad) {
                pp->ensure_grad();
                for (std::size_t i = 0; i < B; ++i) {
                    const double* src = n.grad.d.data() + i * total + off2;
                    double* dst = pp->grad.d.data() + i * C;
                    for (std::size_t j = 0; j < C; ++j) dst[j] += src[j];
                }
            }
            off2 += C;
        }
    }));
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    check(begin < end && end <= x.cols(), "slice_cols: bad range");
    const std::size_t B = x.rows(), C = end - begin, XC = x.cols();
    Mat out(B, C);
    for (std::size_t i = 0; i < B; ++i) {
        std::copy_n(x.value().d.data() + i * XC + begin, C, out.d.data() + i * C);
    }
    return Tensor(make_node(std::move(out), {x.node()}, [B, C, XC, begin](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < B; ++i) {
            const double* src = n.grad.d.data() + i * C;
            double* dst = xp->grad.d.data() + i * XC + begin;
            for (std::size_t j = 0; j < C; ++j) dst[j] += src[j];
        }
    }));
}

Tensor sum_cols(const Tensor& x) {
    const std::size_t B = x.rows(), D = x.cols();
    Mat out(B, 1, 0.0);
    for (std::size_t i = 0; i < B; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < D; ++j) s += x.value().d[i * D + j];
        out.d[i] = s;
    }
    return Tensor(make_node(std::move(out), {x.node()}, [B, D](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        for (std::size_t i = 0; i < B; ++i) {
            const double g = n.grad.d[i];
            for (std::size_t j = 0; j < D; ++j) xp->grad.d[i * D + j] += g;
        }
    }));
}

Tensor sum_all(const Tensor& x) {
    Mat out(1, 1, 0.0);
    for (double v : x.value().d) out.d[0] += v;
    return Tensor(make_node(std::move(out), {x.node()}, [](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double g = n.grad.d[0];
        for (std::size_t i = 0; i < xp->grad.size(); ++i) xp->grad.d[i] += g;
    }));
}

Tensor mean_all(const Tensor& x) {
    check(x.value().size() > 0, "mean_all: empty tensor");
    const double inv = 1.0 / static_cast<double>(x.value().size());
    Mat out(1, 1, 0.0);
    for (double v : x.value().d) out.d[0] += v;
    out.d[0] *= inv;
    return Tensor(make_node(std::move(out), {x.node()}, [inv](Node& n) {
        Node* xp = n.parents[0].get();
        if (!xp->requires_grad) return;
        xp->ensure_grad();
        const double g = n.grad.d[0] * inv;
        for (std::size_t i = 0; i < xp->grad.size(); ++i) xp->grad.d[i] += g;
    }));
}

} // namespace morl::ad
