#include <doctest.h>

#include "hjm/dataset.hpp"
#include "hjm/error.hpp"

using namespace hjm;

namespace {

LongTable long_from(const std::string& text) {
  return parse_longitudinal(csv::read_string(text));
}

EventTable event_from(const std::string& text) { return parse_event(csv::read_string(text)); }

}  // namespace

TEST_CASE("three-level build: patient order from the event table, obs by time") {
  auto lt = long_from(
      "id,cluster,time,value,dose\n"
      "p2,l3,0.5,2.0,1\n"
      "p1,l1,1.0,1.5,0\n"
      "p1,l2,0.2,0.8,0\n"
      "p1,l1,0.0,1.0,0\n");
  auto et = event_from(
      "id,time,status\n"
      "p1,3.0,1\n"
      "p2,2.5,0\n");
  auto data = build_dataset(lt, et, HierarchyMode::kClusterBelowPatient);

  REQUIRE(data.n_patients() == 2);
  CHECK(data.patients[0].id == "p1");
  CHECK(data.patients[1].id == "p2");
  CHECK(data.total_clusters() == 3);
  CHECK(data.total_obs() == 4);

  // p1's clusters in first-appearance order: l1, then l2
  REQUIRE(data.patients[0].clusters.size() == 2);
  CHECK(data.patients[0].clusters[0].id == "l1");
  CHECK(data.patients[0].clusters[1].id == "l2");

  // within l1 the observations are time-sorted: 0.0 then 1.0
  const auto& l1 = data.patients[0].clusters[0];
  REQUIRE(l1.obs.size() == 2);
  CHECK(data.obs_time[l1.obs[0]] == 0.0);
  CHECK(data.obs_time[l1.obs[1]] == 1.0);
  CHECK(data.obs_value[l1.obs[1]] == 1.5);

  CHECK(data.long_covariate_names == std::vector<std::string>{"dose"});
  CHECK(data.cluster_covariates(0, 0) == std::vector<double>{0.0});
}

TEST_CASE("orphans in either direction are rejected") {
  auto lt = long_from("id,cluster,time,value\np1,l1,0.0,1.0\n");
  auto et = event_from("id,time,status\np1,2.0,1\np9,2.0,1\n");
  // event patient with no measurements
  CHECK_THROWS_AS(build_dataset(lt, et, HierarchyMode::kClusterBelowPatient),
                  ValidationError);
  // measured patient with no event row
  auto lt2 = long_from("id,cluster,time,value\np1,l1,0.0,1.0\npX,l1,0.0,1.0\n");
  auto et2 = event_from("id,time,status\np1,2.0,1\n");
  CHECK_THROWS_AS(build_dataset(lt2, et2, HierarchyMode::kClusterBelowPatient),
                  ValidationError);
}

TEST_CASE("a cluster id may not span two patients") {
  auto lt = long_from(
      "id,cluster,time,value\n"
      "p1,shared,0.0,1.0\n"
      "p2,shared,0.0,1.0\n");
  auto et = event_from("id,time,status\np1,2.0,1\np2,2.0,1\n");
  CHECK_THROWS_AS(build_dataset(lt, et, HierarchyMode::kClusterBelowPatient),
                  ValidationError);
}

TEST_CASE("observations after the event time: reject or truncate") {
  auto lt = long_from(
      "id,cluster,time,value\n"
      "p1,l1,0.0,1.0\n"
      "p1,l1,2.5,1.2\n");
  auto et = event_from("id,time,status\np1,2.0,1\n");
  CHECK_THROWS_AS(build_dataset(lt, et, HierarchyMode::kClusterBelowPatient),
                  ValidationError);
  BuildOptions opts;
  opts.truncate_after_event = true;
  auto data = build_dataset(lt, et, HierarchyMode::kClusterBelowPatient, opts);
  CHECK(data.total_obs() == 1);
}

TEST_CASE("truncation cannot leave a patient without measurements") {
  auto lt = long_from("id,cluster,time,value\np1,l1,3.0,1.0\n");
  auto et = event_from("id,time,status\np1,2.0,1\n");
  BuildOptions opts;
  opts.truncate_after_event = true;
  CHECK_THROWS_AS(build_dataset(lt, et, HierarchyMode::kClusterBelowPatient, opts),
                  ValidationError);
}

TEST_CASE("duplicate event rows and bad status values are schema errors") {
  auto lt = long_from("id,cluster,time,value\np1,l1,0.0,1.0\n");
  CHECK_THROWS_AS(event_from("id,time,status\np1,2.0,1\np1,3.0,0\n"), ValidationError);
  CHECK_THROWS_AS(event_from("id,time,status\np1,2.0,2\n"), ValidationError);
  CHECK_THROWS_AS(event_from("id,time,status\np1,-1.0,1\n"), ValidationError);
  (void)lt;
}

TEST_CASE("above-patient mode indexes groups and collapses clusters") {
  auto lt = long_from(
      "id,time,value\n"
      "p1,0.0,1.0\n"
      "p1,1.0,1.1\n"
      "p2,0.0,0.9\n"
      "p3,0.5,1.3\n");
  auto et = event_from(
      "id,time,status,group\n"
      "p1,2.0,1,clinicA\n"
      "p2,3.0,0,clinicB\n"
      "p3,1.5,1,clinicA\n");
  auto data = build_dataset(lt, et, HierarchyMode::kClusterAbovePatient);
  REQUIRE(data.n_groups() == 2);
  CHECK(data.group_ids[0] == "clinicA");
  CHECK(data.patients[0].group_index == 0);
  CHECK(data.patients[1].group_index == 1);
  CHECK(data.patients[2].group_index == 0);
  // one implicit cluster per patient
  for (const auto& p : data.patients) CHECK(p.clusters.size() == 1);
}

TEST_CASE("above-patient mode requires a group column") {
  auto lt = long_from("id,time,value\np1,0.0,1.0\n");
  auto et = event_from("id,time,status\np1,2.0,1\n");
  CHECK_THROWS_AS(build_dataset(lt, et, HierarchyMode::kClusterAbovePatient),
                  ValidationError);
}

TEST_CASE("export round-trips the canonical tables") {
  auto lt = long_from(
      "id,cluster,time,value\n"
      "p1,l1,1.0,2.0\n"
      "p1,l1,0.0,1.0\n");
  auto et = event_from("id,time,status\np1,2.0,1\n");
  auto data = build_dataset(lt, et, HierarchyMode::kClusterBelowPatient);
  auto ltab = data.export_longitudinal();
  auto etab = data.export_event();
  auto data2 = build_dataset(parse_longitudinal(ltab), parse_event(etab),
                             HierarchyMode::kClusterBelowPatient);
  CHECK(data2.total_obs() == data.total_obs());
  CHECK(data2.obs_time == data.obs_time);
  CHECK(data2.obs_value == data.obs_value);
}
