// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "deeprnn/cli.hpp"
#include "deeprnn/errors.hpp"
#include "deeprnn/grad.hpp"
#include "deeprnn/init.hpp"
#include "deeprnn/model.hpp"
#include "deeprnn/run_config.hpp"

namespace py = pybind11;
using namespace deeprnn;

namespace {

RunConfig resolve(const std::map<std::string, std::string>& kv) {
  return resolve_run_config(RawConfig(kv.begin(), kv.end()));
}

// exit code, stdout, stderr
using CliResult = std::tuple<int, std::string, std::string>;

template <class F>
CliResult capture(F&& f) {
  std::ostringstream out, err;
  const int code = f(out, err);
  return {code, out.str(), err.str()};
}

class Model {
 public:
  Model(const std::map<std::string, std::string>& kv, std::uint64_t seed) : rc_(resolve(kv)) {
    Rng rng(seed);
    params_ = init_model(rc_.model, rc_.preset, rng);
  }

  std::size_t parameter_count() const { return params_.scalar_count(); }

  void randomize(double std, std::uint64_t seed) {
    Rng rng(seed);
    for (Param& p : params_) p.value = gaussian_matrix(rng, p.value.rows(), p.value.cols(), std);
  }

  std::vector<std::vector<double>> param(const std::string& name) const {
    const Matrix& m = params_.at(name).value;
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
    return rows;
  }

  double nll(const std::vector<Frame>& frames) const {
    return forward(params_, rc_.model, frames, HiddenState::zeros(rc_.model), false).total_nll;
  }

  std::vector<double> step_nll(const std::vector<Frame>& frames) const {
    return forward(params_, rc_.model, frames, HiddenState::zeros(rc_.model), false).step_nll;
  }

  double gradcheck(const std::vector<Frame>& frames, double eps) const {
    if (frames.size() < 2) throw ConfigError("gradcheck needs at least 2 frames");
    const std::span<const Frame> all(frames);
    const auto in = all.first(all.size() - 1);
    const auto tgt = all.subspan(1);
    const HiddenState h0 = HiddenState::zeros(rc_.model);
    const GradSet analytic = bptt(params_, rc_.model, in, tgt, h0).grads;
    const GradSet numeric = finite_difference_grad(params_, rc_.model, in, tgt, h0, eps);
    return compare_gradients(analytic, numeric).max_relative_error;
  }

  std::string config_text() const { return rc_.to_text(); }

 private:
  RunConfig rc_;
  ParamSet params_;
};

}  // namespace

PYBIND11_MODULE(_deeprnn, m) {
  m.doc() = "Deep recurrent network training and evaluation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("resolve_config", [](const std::map<std::string, std::string>& kv) {
    return resolve(kv).to_text();
  });
  m.def("parameter_shapes", [](const std::map<std::string, std::string>& kv) {
    std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
    for (const Param& p : build(resolve(kv).model).params) {
      out.emplace_back(p.name, p.value.rows(), p.value.cols());
    }
    return out;
  });
  m.def("parameter_count", [](const std::map<std::string, std::string>& kv) {
    return build(resolve(kv).model).parameter_count;
  });

  py::class_<Model>(m, "Model")
      .def(py::init<const std::map<std::string, std::string>&, std::uint64_t>(), py::arg("config"),
           py::arg("seed") = 1)
      .def_property_readonly("parameter_count", &Model::parameter_count)
      .def("randomize", &Model::randomize, "Redraws every tensor from N(0, std^2).",
           py::arg("std"), py::arg("seed") = 1)
      .def("param", &Model::param)
      .def("nll", &Model::nll, "Summed next-step nll in nats from a zero state.")
      .def("step_nll", &Model::step_nll)
      .def("gradcheck", &Model::gradcheck, py::arg("frames"), py::arg("eps") = 1e-5)
      .def("config_text", &Model::config_text);

  m.def("train", [](const std::map<std::string, std::string>& kv) {
    const RunConfig rc = resolve(kv);
    py::gil_scoped_release release;
    return capture([&](auto& out, auto& err) { return cli::cmd_train(rc, out, err); });
  });
  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::string& data, std::size_t chunk) {
        cli::EvalOptions o;
        o.checkpoint = checkpoint;
        o.data = data;
        o.chunk = chunk;
        o.json = true;
        return capture([&](auto& out, auto& err) { return cli::cmd_eval(o, out, err); });
      },
      py::arg("checkpoint"), py::arg("data"), py::arg("chunk") = 1000);
  m.def(
      "gradcheck",
      [](const std::map<std::string, std::string>& kv, bool all) {
        const RunConfig rc = resolve(kv);
        cli::GradcheckOptions o;
        o.all_architectures = all;
        return capture([&](auto& out, auto& err) { return cli::cmd_gradcheck(rc, o, out, err); });
      },
      py::arg("config"), py::arg("all") = false);
}
