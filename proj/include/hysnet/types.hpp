#pragma once

#include <Eigen/Dense>

namespace hysnet {

using Real = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec2 = Eigen::Vector2d;
using Index = Eigen::Index;

enum class Regime { SmallDamping, LargeDamping };

constexpr Real kPi = 3.14159265358979323846;

}  // namespace hysnet
