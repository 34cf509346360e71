// SPDX-License-Identifier: Apache-2.0
//
// JSON interchange: dispersion-matrix export of a multi-user scheme (so
// third-party codes can be fed to the diversity verifier) and rank-report
// serialization. Complex entries are [re, im] pairs.
#pragma once

#include <string>

#include <json.hpp>

#include "icmac/diversity.hpp"
#include "icmac/matcore.hpp"
#include "icmac/stbc.hpp"

namespace icmac {

using nlohmann::json;

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.at(0).size();
  CMatrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows.at(i).size() != c) throw IoError("code json: ragged matrix rows");
    for (std::size_t j = 0; j < c; ++j) {
      const auto& e = rows.at(i).at(j);
      m(i, j) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  if (!m.all_finite()) throw IoError("code json: non-finite matrix entry");
  return m;
}

inline json scheme_to_json(const MultiUserScheme& s) {
  json j;
  j["scheme"] = s.kind == SchemeKind::TwoUser    ? "two-user"
                : s.kind == SchemeKind::ThreeUser ? "three-user"
                                                  : "custom";
  j["K"] = s.K;
  j["T"] = s.T;
  j["nt"] = s.nt;
  j["n"] = s.n;
  j["decode_order"] = s.decode_order;
  json rot = json::array();
  const RotationMatrix& u = s.codes[0].rotation;
  for (std::size_t i = 0; i < u.n; ++i) {
    json row = json::array();
    for (std::size_t jj = 0; jj < u.n; ++jj) row.push_back(u(i, jj));
    rot.push_back(std::move(row));
  }
  j["rotation"] = std::move(rot);
  json users = json::array();
  for (const LinearDispersionCode& code : s.codes) {
    json cu;
    cu["user"] = code.user + 1;  // 1-based in the interchange format
    json disp = json::array();
    for (const CMatrix& a : code.dispersion) disp.push_back(matrix_to_json(a));
    cu["dispersion"] = std::move(disp);
    users.push_back(std::move(cu));
  }
  j["users"] = std::move(users);
  return j;
}

// Rebuild a scheme from its JSON export. The rotation is re-certified with
// the product-distance check when its size is in the supported range, so a
// hand-edited file cannot claim full diversity it does not have.
inline MultiUserScheme scheme_from_json(const json& j) {
  MultiUserScheme s;
  const std::string kind = j.at("scheme").get<std::string>();
  s.kind = kind == "two-user"    ? SchemeKind::TwoUser
           : kind == "three-user" ? SchemeKind::ThreeUser
                                  : SchemeKind::Custom;
  s.K = j.at("K").get<std::size_t>();
  s.T = j.at("T").get<std::size_t>();
  s.nt = j.at("nt").get<std::size_t>();
  s.n = j.at("n").get<std::size_t>();
  if (j.contains("decode_order"))
    s.decode_order = j.at("decode_order").get<std::vector<std::size_t>>();
  else {
    s.decode_order.resize(s.K);
    std::iota(s.decode_order.begin(), s.decode_order.end(), std::size_t{0});
  }

  RotationMatrix rot;
  rot.n = s.n;
  rot.a.resize(s.n * s.n);
  const json& rj = j.at("rotation");
  if (rj.size() != s.n) throw IoError("code json: rotation size mismatch");
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t jj = 0; jj < s.n; ++jj)
      rot.a[i * s.n + jj] = rj.at(i).at(jj).get<double>();
  rot.certified = false;
  if (s.n >= 2 && s.n <= 6)
    rot.certified = min_product_distance(rot, make_qam(4).symbol_differences()) > 1e-9;

  for (const json& cu : j.at("users")) {
    LinearDispersionCode code;
    code.user = cu.at("user").get<std::size_t>() - 1;
    code.T = s.T;
    code.nt = s.nt;
    code.n = s.n;
    code.rotation = rot;
    for (const json& a : cu.at("dispersion")) {
      CMatrix m = matrix_from_json(a);
      if (m.rows() != s.T || m.cols() != s.nt)
        throw IoError("code json: dispersion matrix shape mismatch");
      code.dispersion.push_back(std::move(m));
    }
    if (code.dispersion.size() != s.n)
      throw IoError("code json: wrong dispersion matrix count");
    s.codes.push_back(std::move(code));
  }
  if (s.codes.size() != s.K) throw IoError("code json: wrong user count");
  return s;
}

inline json rank_report_to_json(const RankReport& r) {
  json j;
  j["scheme"] = r.scheme_id;
  j["check"] = r.check;
  j["trials"] = r.trials;
  j["failures"] = r.failures;
  j["min_rank_margin"] = r.min_rank_margin;
  j["exhaustive"] = r.exhaustive;
  if (r.difference_space > 0) j["difference_space"] = r.difference_space;
  json per_user = json::array();
  for (const UserRankStats& u : r.per_user) {
    json ju;
    ju["user"] = u.user + 1;
    ju["checked"] = u.checked;
    ju["failures"] = u.failures;
    ju["min_rank_margin"] = u.min_rank_margin;
    ju["redraws"] = u.redraws;
    per_user.push_back(std::move(ju));
  }
  j["per_user"] = std::move(per_user);
  return j;
}

}  // namespace icmac
