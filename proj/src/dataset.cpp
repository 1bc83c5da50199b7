#include "hjm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "hjm/error.hpp"

namespace hjm {

HierarchyMode parse_hierarchy_mode(const std::string& name) {
  if (name == "below" || name == "cluster-below-patient") return HierarchyMode::kClusterBelowPatient;
  if (name == "none" || name == "patient-only") return HierarchyMode::kPatientOnly;
  if (name == "above" || name == "cluster-above-patient") return HierarchyMode::kClusterAbovePatient;
  throw DomainError("unknown hierarchy mode \"" + name + "\" (expected below, none, or above)");
}

std::string to_string(HierarchyMode mode) {
  switch (mode) {
    case HierarchyMode::kClusterBelowPatient: return "below";
    case HierarchyMode::kPatientOnly: return "none";
    case HierarchyMode::kClusterAbovePatient: return "above";
  }
  return "?";
}

namespace {

std::string row_ctx(std::size_t r) { return "row " + std::to_string(r + 1); }

}  // namespace

LongTable parse_longitudinal(const csv::Table& table, const LongColumnMap& map) {
  if (table.rows.empty()) throw SchemaError("longitudinal table has no data rows");
  const int id_col = table.require(map.id);
  const int time_col = table.require(map.time);
  const int value_col = table.require(map.value);
  const int cluster_col = table.column(map.cluster);  // optional: two-level mode

  LongTable out;
  std::vector<int> cov_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (c == id_col || c == time_col || c == value_col || c == cluster_col) continue;
    cov_cols.push_back(c);
    out.covariate_names.push_back(table.header[c]);
  }

  out.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    LongitudinalRecord rec;
    rec.patient_id = table.cell(r, id_col);
    if (rec.patient_id.empty())
      throw ParseError(row_ctx(r) + ": empty patient id");
    if (cluster_col >= 0) rec.cluster_id = table.cell(r, cluster_col);
    rec.time = csv::parse_real(table.cell(r, time_col), row_ctx(r) + ", column \"" + map.time + "\"");
    if (rec.time < 0)
      throw ValidationError(row_ctx(r) + ": negative time " + csv::format_real(rec.time));
    rec.value = csv::parse_real(table.cell(r, value_col), row_ctx(r) + ", column \"" + map.value + "\"");
    rec.covariates.reserve(cov_cols.size());
    for (int c : cov_cols)
      rec.covariates.push_back(
          csv::parse_real(table.cell(r, c), row_ctx(r) + ", column \"" + table.header[c] + "\""));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

LongTable load_longitudinal(const std::string& path, const LongColumnMap& map) {
  return parse_longitudinal(csv::read_file(path), map);
}

EventTable parse_event(const csv::Table& table, const EventColumnMap& map) {
  if (table.rows.empty()) throw SchemaError("event table has no data rows");
  const int id_col = table.require(map.id);
  const int time_col = table.require(map.time);
  const int status_col = table.require(map.status);
  const int group_col = table.column(map.group);

  EventTable out;
  out.has_group = group_col >= 0;
  std::vector<int> cov_cols;
  for (int c = 0; c < static_cast<int>(table.header.size()); ++c) {
    if (c == id_col || c == time_col || c == status_col || c == group_col) continue;
    cov_cols.push_back(c);
    out.covariate_names.push_back(table.header[c]);
  }

  std::set<std::string> seen;
  out.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    EventRecord rec;
    rec.patient_id = table.cell(r, id_col);
    if (rec.patient_id.empty()) throw ParseError(row_ctx(r) + ": empty patient id");
    if (!seen.insert(rec.patient_id).second)
      throw ValidationError(row_ctx(r) + ": duplicate patient id \"" + rec.patient_id + "\"");
    rec.event_time =
        csv::parse_real(table.cell(r, time_col), row_ctx(r) + ", column \"" + map.time + "\"");
    if (!(rec.event_time > 0))
      throw ValidationError(row_ctx(r) + ": event time must be > 0, got " +
                            csv::format_real(rec.event_time));
    const std::string& s = table.cell(r, status_col);
    if (s == "0") {
      rec.status = 0;
    } else if (s == "1") {
      rec.status = 1;
    } else {
      throw ValidationError(row_ctx(r) + ": status must be 0 or 1, got \"" + s + "\"");
    }
    if (group_col >= 0) rec.group_id = table.cell(r, group_col);
    rec.covariates.reserve(cov_cols.size());
    for (int c : cov_cols)
      rec.covariates.push_back(
          csv::parse_real(table.cell(r, c), row_ctx(r) + ", column \"" + table.header[c] + "\""));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

EventTable load_event(const std::string& path, const EventColumnMap& map) {
  return parse_event(csv::read_file(path), map);
}

int Dataset::total_clusters() const {
  int total = 0;
  for (const auto& p : patients) total += static_cast<int>(p.clusters.size());
  return total;
}

double Dataset::max_event_time() const {
  double m = 0.0;
  for (const auto& p : patients) m = std::max(m, p.event_time);
  return m;
}

int Dataset::cluster_offset(int i, int j) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += static_cast<int>(patients[k].clusters.size());
  return off + j;
}

const std::vector<double>& Dataset::cluster_covariates(int i, int j) const {
  return obs_covariates[patients[i].clusters[j].obs.front()];
}

int Dataset::find_patient(const std::string& id) const {
  for (int i = 0; i < n_patients(); ++i)
    if (patients[i].id == id) return i;
  return -1;
}

Dataset build_dataset(const LongTable& longitudinal, const EventTable& event,
                      HierarchyMode mode, const BuildOptions& options) {
  if (longitudinal.rows.empty()) throw ValidationError("longitudinal table is empty");
  if (event.rows.empty()) throw ValidationError("event table is empty");
  if (mode == HierarchyMode::kClusterAbovePatient && !event.has_group)
    throw ValidationError("cluster-above-patient mode requires a group column in the event table");

  Dataset ds;
  ds.mode = mode;
  ds.long_covariate_names = longitudinal.covariate_names;
  ds.event_covariate_names = event.covariate_names;

  // Patients in order of first appearance in the event table.
  std::map<std::string, int> patient_index;
  std::map<std::string, int> group_index;
  for (const auto& er : event.rows) {
    Patient p;
    p.id = er.patient_id;
    p.event_time = er.event_time;
    p.status = er.status;
    p.event_covariates = er.covariates;
    if (mode == HierarchyMode::kClusterAbovePatient) {
      if (er.group_id.empty())
        throw ValidationError("patient \"" + er.patient_id + "\" has an empty group id");
      p.group_id = er.group_id;
      auto [it, inserted] = group_index.emplace(er.group_id, static_cast<int>(ds.group_ids.size()));
      if (inserted) ds.group_ids.push_back(er.group_id);
      p.group_index = it->second;
    }
    patient_index.emplace(p.id, static_cast<int>(ds.patients.size()));
    ds.patients.push_back(std::move(p));
  }

  // Cluster nesting check spans the whole table, independent of mode.
  std::map<std::string, std::string> cluster_owner;

  // Group longitudinal rows per (patient, cluster), preserving input order.
  struct PendingObs {
    double time;
    double value;
    const std::vector<double>* covariates;
    std::size_t input_row;
  };
  std::vector<std::map<std::string, std::vector<PendingObs>>> pending(ds.patients.size());
  std::vector<std::vector<std::string>> cluster_order(ds.patients.size());

  const bool collapse = mode != HierarchyMode::kClusterBelowPatient;
  for (std::size_t r = 0; r < longitudinal.rows.size(); ++r) {
    const auto& rec = longitudinal.rows[r];
    auto it = patient_index.find(rec.patient_id);
    if (it == patient_index.end())
      throw ValidationError("longitudinal patient \"" + rec.patient_id +
                            "\" is absent from the event table");
    const int i = it->second;
    std::string cid = collapse ? std::string() : rec.cluster_id;
    if (!collapse && !cid.empty()) {
      auto [co, inserted] = cluster_owner.emplace(cid, rec.patient_id);
      if (!inserted && co->second != rec.patient_id)
        throw ValidationError("cluster \"" + cid + "\" appears under patients \"" + co->second +
                              "\" and \"" + rec.patient_id + "\"");
    }
    const double event_time = ds.patients[i].event_time;
    if (rec.time > event_time) {
      if (options.truncate_after_event) continue;
      throw ValidationError("patient \"" + rec.patient_id + "\": observation at time " +
                            csv::format_real(rec.time) + " is after event time " +
                            csv::format_real(event_time));
    }
    auto& bucket = pending[i][cid];
    if (bucket.empty()) cluster_order[i].push_back(cid);
    bucket.push_back({rec.time, rec.value, &rec.covariates, r});
  }

  for (int i = 0; i < ds.n_patients(); ++i) {
    if (pending[i].empty())
      throw ValidationError("patient \"" + ds.patients[i].id + "\" has no longitudinal records");
    for (const auto& cid : cluster_order[i]) {
      auto& bucket = pending[i][cid];
      std::stable_sort(bucket.begin(), bucket.end(), [](const PendingObs& a, const PendingObs& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.input_row < b.input_row;
      });
      Cluster cl;
      cl.id = cid;
      for (const auto& obs : bucket) {
        cl.obs.push_back(ds.total_obs());
        ds.obs_time.push_back(obs.time);
        ds.obs_value.push_back(obs.value);
        ds.obs_covariates.push_back(*obs.covariates);
      }
      ds.patients[i].clusters.push_back(std::move(cl));
    }
  }

  return ds;
}

csv::Table Dataset::export_longitudinal() const {
  csv::Table t;
  t.header = {"id"};
  if (mode == HierarchyMode::kClusterBelowPatient) t.header.push_back("cluster");
  t.header.push_back("time");
  t.header.push_back("value");
  for (const auto& n : long_covariate_names) t.header.push_back(n);
  for (const auto& p : patients) {
    for (const auto& cl : p.clusters) {
      for (int k : cl.obs) {
        std::vector<std::string> row = {p.id};
        if (mode == HierarchyMode::kClusterBelowPatient) row.push_back(cl.id);
        row.push_back(csv::format_real(obs_time[k]));
        row.push_back(csv::format_real(obs_value[k]));
        for (double v : obs_covariates[k]) row.push_back(csv::format_real(v));
        t.rows.push_back(std::move(row));
      }
    }
  }
  return t;
}

csv::Table Dataset::export_event() const {
  csv::Table t;
  t.header = {"id", "time", "status"};
  if (mode == HierarchyMode::kClusterAbovePatient) t.header.push_back("group");
  for (const auto& n : event_covariate_names) t.header.push_back(n);
  for (const auto& p : patients) {
    std::vector<std::string> row = {p.id, csv::format_real(p.event_time), std::to_string(p.status)};
    if (mode == HierarchyMode::kClusterAbovePatient) row.push_back(p.group_id);
    for (double v : p.event_covariates) row.push_back(csv::format_real(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace hjm
