#pragma once

#include <string>

#include "hjm/dataset.hpp"
#include "hjm/model_spec.hpp"

namespace hjm::testing {

// Small deterministic three-level dataset: 4 patients, 1-3 lesions each,
// 2-4 visits per lesion, one binary covariate on each side.
inline Dataset small_three_level() {
  auto lt = parse_longitudinal(csv::read_string(
      "id,cluster,time,value,dose\n"
      "p1,a1,0.0,0.62,1\n"
      "p1,a1,0.8,0.95,1\n"
      "p1,a1,1.9,1.40,1\n"
      "p1,a2,0.0,0.31,1\n"
      "p1,a2,1.1,0.52,1\n"
      "p2,b1,0.0,-0.20,0\n"
      "p2,b1,1.2,0.05,0\n"
      "p2,b1,2.6,0.33,0\n"
      "p2,b2,0.3,0.48,0\n"
      "p2,b2,1.8,0.77,0\n"
      "p2,b3,0.0,0.15,0\n"
      "p2,b3,2.1,0.58,0\n"
      "p3,c1,0.0,1.02,1\n"
      "p3,c1,0.9,1.35,1\n"
      "p4,d1,0.0,-0.55,0\n"
      "p4,d1,1.1,-0.12,0\n"
      "p4,d1,2.8,0.44,0\n"
      "p4,d2,0.5,0.09,0\n"));
  auto et = parse_event(csv::read_string(
      "id,time,status,sex\n"
      "p1,2.4,1,1\n"
      "p2,3.1,0,0\n"
      "p3,1.3,1,1\n"
      "p4,3.4,1,0\n"));
  return build_dataset(lt, et, HierarchyMode::kClusterBelowPatient);
}

inline ModelSpec small_spec() {
  ModelSpec spec;
  spec.mode = HierarchyMode::kClusterBelowPatient;
  spec.longitudinal_formula = "value ~ 1 + time + dose + (1 + time | patient) + (1 | cluster)";
  spec.event_formula = "~ sex";
  spec.association = {{Functional::kValue, Summary::kMax}};
  spec.baseline_df = 5;
  spec.standardize = false;
  return spec;
}

}  // namespace hjm::testing
