#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qbo::numeric {

/// exp(A) by scaling and squaring with the [13/13] diagonal Pade approximant.
/// The scaling exponent s is the smallest with ||A||_1 / 2^s <= theta_13.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  using Mat = Eigen::MatrixXd;
  constexpr double theta13 = 5.371920351148152;
  constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                          1187353796428800.0,  129060195264000.0,   10559470521600.0,
                          670442572800.0,      33522128640.0,       1323241920.0,
                          40840800.0,          960960.0,            16380.0,
                          182.0,               1.0};

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13) s = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
  const Mat as = a / std::ldexp(1.0, s);

  const Mat ident = Mat::Identity(a.rows(), a.cols());
  const Mat a2 = as * as;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  const Mat u = as * u_inner;
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

}  // namespace qbo::numeric
