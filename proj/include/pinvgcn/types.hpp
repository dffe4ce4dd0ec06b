#pragma once

#include <Eigen/Core>

namespace pinvgcn {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// All shipped entry points run in double precision; the templated kernels
// below exist so the numeric core stays scalar-generic.
using Real = double;
using Mat = Matrix<Real>;
using Vec = Vector<Real>;

using MatRef = Eigen::Ref<Mat>;
using ConstMatRef = Eigen::Ref<const Mat>;
using VecRef = Eigen::Ref<Vec>;
using ConstVecRef = Eigen::Ref<const Vec>;

} // namespace pinvgcn
