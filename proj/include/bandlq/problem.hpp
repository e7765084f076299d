#pragma once

#include <string>
#include <vector>

#include "bandlq/error.hpp"
#include "bandlq/model.hpp"

namespace bandlq {

/// LQ problem on a descriptor model with diagonal weights Q (outputs) and R (inputs).
struct LqProblem {
  DescriptorModel model;
  std::vector<double> Q;
  std::vector<double> R;

  void validate() const {
    const Index n = model.states();
    if (model.E.rows() != n || model.E.cols() != n || model.A.cols() != n)
      throw ShapeError("LqProblem: E is " + detail::shape_str(model.E.rows(), model.E.cols()) +
                       ", A is " + detail::shape_str(n, model.A.cols()));
    if (model.B.rows() != n || model.C.cols() != n)
      throw ShapeError("LqProblem: B is " + detail::shape_str(model.B.rows(), model.B.cols()) +
                       ", C is " + detail::shape_str(model.C.rows(), model.C.cols()));
    if (static_cast<Index>(Q.size()) != model.outputs())
      throw ShapeError("LqProblem: Q has " + std::to_string(Q.size()) + " entries for " +
                       std::to_string(model.outputs()) + " outputs");
    if (static_cast<Index>(R.size()) != model.inputs())
      throw ShapeError("LqProblem: R has " + std::to_string(R.size()) + " entries for " +
                       std::to_string(model.inputs()) + " inputs");
    for (double q : Q)
      if (!(q >= 0.0)) throw InvalidArgument("LqProblem: Q entries must be >= 0");
    for (double r : R)
      if (!(r > 0.0)) throw InvalidArgument("LqProblem: R entries must be > 0");
  }

  /// Problem with Q = q I and R = r I.
  static LqProblem uniform(DescriptorModel model, double q = 1.0, double r = 1.0) {
    LqProblem p;
    p.Q.assign(static_cast<std::size_t>(model.outputs()), q);
    p.R.assign(static_cast<std::size_t>(model.inputs()), r);
    p.model = std::move(model);
    return p;
  }
};

}  // namespace bandlq
