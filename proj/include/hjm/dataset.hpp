#pragma once

#include <string>
#include <vector>

#include "hjm/csv.hpp"

namespace hjm {

enum class HierarchyMode {
  kClusterBelowPatient,  // observations in clusters in patients (three levels)
  kPatientOnly,          // observations in patients (two levels)
  kClusterAbovePatient,  // observations in patients in groups (clinic/trial)
};

HierarchyMode parse_hierarchy_mode(const std::string& name);
std::string to_string(HierarchyMode mode);

struct LongitudinalRecord {
  std::string patient_id;
  std::string cluster_id;  // empty in two-level / above-patient data
  double time = 0.0;
  double value = 0.0;
  std::vector<double> covariates;  // aligned with LongTable::covariate_names
};

struct EventRecord {
  std::string patient_id;
  double event_time = 0.0;
  int status = 0;  // 1 = event observed, 0 = censored
  std::string group_id;  // level-above-patient cluster, may be empty
  std::vector<double> covariates;
};

struct LongTable {
  std::vector<std::string> covariate_names;
  std::vector<LongitudinalRecord> rows;
};

struct EventTable {
  std::vector<std::string> covariate_names;
  bool has_group = false;
  std::vector<EventRecord> rows;
};

struct LongColumnMap {
  std::string id = "id";
  std::string cluster = "cluster";
  std::string time = "time";
  std::string value = "value";
};

struct EventColumnMap {
  std::string id = "id";
  std::string time = "time";
  std::string status = "status";
  std::string group = "group";
};

LongTable load_longitudinal(const std::string& path, const LongColumnMap& map = {});
LongTable parse_longitudinal(const csv::Table& table, const LongColumnMap& map = {});
EventTable load_event(const std::string& path, const EventColumnMap& map = {});
EventTable parse_event(const csv::Table& table, const EventColumnMap& map = {});

// One level-2 cluster (lesion) with its observation indices, in canonical
// order (time ascending, input order breaking ties). Indices address the
// flattened observation arrays of the Dataset.
struct Cluster {
  std::string id;
  std::vector<int> obs;
};

struct Patient {
  std::string id;
  double event_time = 0.0;
  int status = 0;
  std::string group_id;
  int group_index = -1;  // into Dataset::group_ids, above-patient mode only
  std::vector<double> event_covariates;
  std::vector<Cluster> clusters;
};

// Immutable after construction; everything downstream addresses
// (patient i, cluster j, observation k) through this index.
struct Dataset {
  HierarchyMode mode = HierarchyMode::kClusterBelowPatient;
  std::vector<Patient> patients;
  std::vector<std::string> group_ids;

  // Flattened longitudinal observations in canonical order.
  std::vector<double> obs_time;
  std::vector<double> obs_value;
  std::vector<std::vector<double>> obs_covariates;

  std::vector<std::string> long_covariate_names;
  std::vector<std::string> event_covariate_names;

  int n_patients() const { return static_cast<int>(patients.size()); }
  int n_groups() const { return static_cast<int>(group_ids.size()); }
  int total_clusters() const;
  int total_obs() const { return static_cast<int>(obs_time.size()); }
  double max_event_time() const;

  // Global index of cluster j of patient i in 0..total_clusters().
  int cluster_offset(int i, int j) const;

  // Baseline covariate vector of a cluster: taken from its first observation.
  const std::vector<double>& cluster_covariates(int i, int j) const;

  int find_patient(const std::string& id) const;  // -1 if absent

  csv::Table export_longitudinal() const;
  csv::Table export_event() const;
};

struct BuildOptions {
  // Observations with time > event_time are rejected by default; with
  // truncate set they are dropped instead.
  bool truncate_after_event = false;
};

Dataset build_dataset(const LongTable& longitudinal, const EventTable& event,
                      HierarchyMode mode, const BuildOptions& options = {});

}  // namespace hjm
