#pragma once

#include <string>

namespace morl::acceptance {

struct CriterionResult {
    std::string title;
    bool pass = false;
    std::string detail;
};

CriterionResult criterion1_metric_oracles();
CriterionResult criterion2_gradient_suite();
CriterionResult criterion3_bellman_oracle();
CriterionResult criterion4_prefid_trend();
CriterionResult criterion5_expressiveness();
CriterionResult criterion6_front_quality();
CriterionResult criterion7_adaptation_ordering();
CriterionResult criterion8_exclusion_ablation();
CriterionResult criterion9_determinism();

} // namespace morl::acceptance
