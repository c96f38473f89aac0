#pragma once

#include "quickstop/types.hpp"

namespace quickstop::fixtures {

/// Empirical edge-class transition matrices measured on the Weibo
/// retweet dataset, as published (three decimals; two rows sum to 0.999).
inline MatrixXd weibo_news_raw() {
  MatrixXd m(4, 4);
  m << 0.828, 0.120, 0.039, 0.012,
       0.651, 0.224, 0.084, 0.041,
       0.500, 0.193, 0.191, 0.116,
       0.279, 0.181, 0.211, 0.329;
  return m;
}

inline MatrixXd weibo_misinformation_raw() {
  MatrixXd m(4, 4);
  m << 0.163, 0.167, 0.249, 0.421,
       0.105, 0.194, 0.239, 0.461,
       0.080, 0.119, 0.277, 0.524,
       0.052, 0.088, 0.203, 0.657;
  return m;
}

/// The Weibo matrices with each row rescaled to sum to one.
inline TransitionModel weibo_model() {
  return TransitionModel::normalized(weibo_news_raw(), weibo_misinformation_raw());
}

}  // namespace quickstop::fixtures
