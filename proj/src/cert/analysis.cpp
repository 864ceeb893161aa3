#include "quicaudit/cert/analysis.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

#include "quicaudit/error.hpp"

namespace quicaudit::cert {

void TrustStore::add(const CertRecord& cert) {
  if (!cert.self_signed) throw ConfigError("trust store root is not self-signed: " + cert.subject_text);
  roots_.emplace(cert.subject, Root{cert.subject, cert.spki_digest, cert.der, cert.subject_text});
}

TrustStore TrustStore::load_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  TrustStore store;
  if (!fs::is_directory(dir)) throw IoError("trust store directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pem" || ext == ".crt" || ext == ".cer")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    ChainRecord c;
    try {
      c = load_chain_file(f.string());
    } catch (const ParseError&) {
      ++store.skipped_;
      continue;
    }
    for (const auto& cert : c.certs) {
      if (cert.self_signed)
        store.add(cert);
      else
        ++store.skipped_;
    }
  }
  return store;
}

TrustStore TrustStore::from_certs(const std::vector<CertRecord>& certs) {
  TrustStore store;
  for (const auto& c : certs) store.add(c);
  return store;
}

const TrustStore::Root* TrustStore::find(const Bytes& subject, const Sha256Digest& spki) const {
  auto [lo, hi] = roots_.equal_range(subject);
  for (auto it = lo; it != hi; ++it)
    if (it->second.spki_digest == spki) return &it->second;
  return nullptr;
}

std::string_view to_string(FindingKind k) {
  return k == FindingKind::kCrossSigned ? "CROSS_SIGNED" : "INCLUDED_ANCHOR";
}

std::vector<Finding> detect_cross_signed(const ChainRecord& chain, const TrustStore& store) {
  std::vector<Finding> out;
  for (std::size_t i = 1; i < chain.certs.size(); ++i) {
    const auto& c = chain.certs[i];
    if (c.issuer == c.subject) continue;
    const auto* root = store.find(c.subject, c.spki_digest);
    if (!root) continue;
    out.push_back({FindingKind::kCrossSigned, i, c.der_len, c.subject_text, c.issuer_text,
                   "clients already trust the self-signed " + root->subject_text +
                       "; drop the cross-signed copy or ship the self-signed variant"});
  }
  return out;
}

std::vector<Finding> detect_included_anchor(const ChainRecord& chain) {
  std::vector<Finding> out;
  for (std::size_t i = 0; i < chain.certs.size(); ++i) {
    const auto& c = chain.certs[i];
    if (!c.self_signed) continue;
    out.push_back({FindingKind::kIncludedAnchor, i, c.der_len, c.subject_text, c.issuer_text,
                   "trust anchors are not needed on the wire; remove it"});
  }
  return out;
}

LimitFit limit_fit(const ChainRecord& chain, std::uint32_t initial_size, std::uint64_t overhead) {
  if (initial_size < 1200 || initial_size > 65527)
    throw ConfigError("initial size outside [1200, 65527]");
  LimitFit fit;
  fit.budget = 3ull * initial_size;
  fit.used = chain.total_len + overhead;
  fit.fits = fit.used <= fit.budget;
  return fit;
}

CruiseLinerScore cruise_liner_score(const ChainRecord& chain) {
  if (chain.certs.empty()) throw ConfigError("chain has no leaf");
  const auto& leaf = chain.leaf();
  CruiseLinerScore s;
  s.san_share = static_cast<double>(leaf.san_bytes) / static_cast<double>(leaf.der_len);
  // Integer comparison keeps the threshold exact.
  s.flagged = leaf.san_bytes * 1000 >= 289 * leaf.der_len;
  return s;
}

std::string_view to_string(RoleGroup g) { return g == RoleGroup::kLeaf ? "Leaf" : "Non-leaf"; }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double median(const std::vector<std::uint64_t>& values) {
  return median(std::vector<double>(values.begin(), values.end()));
}

namespace {

FieldStats summarize(const std::vector<std::uint64_t>& v) {
  FieldStats s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = static_cast<double>(std::accumulate(v.begin(), v.end(), std::uint64_t{0})) / static_cast<double>(v.size());
  s.median = median(v);
  return s;
}

std::size_t group_index(const CertRecord&, std::size_t pos) { return pos == 0 ? 0 : 1; }

}  // namespace

void FieldAnatomy::add(const ChainRecord& chain) {
  for (std::size_t i = 0; i < chain.certs.size(); ++i) {
    const auto& c = chain.certs[i];
    const std::size_t g = group_index(c, i);
    for (std::size_t f = 0; f < kFieldCount; ++f) samples_[g][f].push_back(c.field_sizes[f]);
    overhead_[g].push_back(c.structural_overhead);
  }
}

void FieldAnatomy::merge(const FieldAnatomy& other) {
  for (std::size_t g = 0; g < 2; ++g) {
    for (std::size_t f = 0; f < kFieldCount; ++f)
      samples_[g][f].insert(samples_[g][f].end(), other.samples_[g][f].begin(), other.samples_[g][f].end());
    overhead_[g].insert(overhead_[g].end(), other.overhead_[g].begin(), other.overhead_[g].end());
  }
}

std::size_t FieldAnatomy::cert_count(RoleGroup g) const { return overhead_[static_cast<std::size_t>(g)].size(); }

FieldStats FieldAnatomy::stats(RoleGroup g, Field f) const {
  return summarize(samples_[static_cast<std::size_t>(g)][static_cast<std::size_t>(f)]);
}

FieldStats FieldAnatomy::overhead_stats(RoleGroup g) const {
  return summarize(overhead_[static_cast<std::size_t>(g)]);
}

std::vector<Field> FieldAnatomy::ranking(RoleGroup g) const {
  std::vector<Field> fields(kAllFields.begin(), kAllFields.end());
  std::stable_sort(fields.begin(), fields.end(),
                   [&](Field a, Field b) { return stats(g, a).mean > stats(g, b).mean; });
  return fields;
}

FieldAnatomy field_anatomy(const std::vector<ChainRecord>& chains) {
  FieldAnatomy a;
  for (const auto& c : chains) a.add(c);
  return a;
}

double ParentGrouping::top_coverage(std::size_t n) const {
  double s = 0;
  for (std::size_t i = 0; i < std::min(n, groups.size()); ++i) s += groups[i].coverage;
  return s;
}

ParentGrouping parent_chain_group(const std::vector<ChainRecord>& chains) {
  ParentGrouping out;
  std::map<std::string, std::vector<const ChainRecord*>> by_id;
  for (const auto& c : chains) {
    if (!c.ordered_correctly) {
      ++out.excluded_unordered;
      continue;
    }
    ++out.considered;
    by_id[c.parent_chain_hex()].push_back(&c);
  }
  for (const auto& [id, members] : by_id) {
    ParentGroup g;
    g.parent_chain_id = id;
    g.service_count = members.size();
    g.coverage = static_cast<double>(members.size()) / static_cast<double>(out.considered);
    const auto& first = *members.front();
    for (std::size_t i = 1; i < first.certs.size(); ++i) {
      g.non_leaf_sizes.push_back(first.certs[i].der_len);
      g.non_leaf_total += first.certs[i].der_len;
      g.issuers.push_back(first.certs[i].subject_text);
    }
    std::vector<std::uint64_t> leaves;
    for (const auto* m : members) leaves.push_back(m->leaf().der_len);
    g.leaf_median = median(leaves);
    g.leaf_max = *std::max_element(leaves.begin(), leaves.end());
    out.groups.push_back(std::move(g));
  }
  std::sort(out.groups.begin(), out.groups.end(), [](const ParentGroup& a, const ParentGroup& b) {
    return a.service_count != b.service_count ? a.service_count > b.service_count
                                              : a.parent_chain_id < b.parent_chain_id;
  });
  return out;
}

KeyAlgoTable key_algo_stats(const std::vector<ChainRecord>& chains, double min_share) {
  KeyAlgoTable t;
  std::map<KeyAlgo, std::size_t> overall;
  std::size_t total = 0;
  for (const auto& c : chains) {
    for (std::size_t i = 0; i < c.certs.size(); ++i) {
      const auto g = group_index(c.certs[i], i) == 0 ? RoleGroup::kLeaf : RoleGroup::kNonLeaf;
      const std::string row = std::string(to_string(c.source)) + " " + std::string(to_string(g));
      ++t.counts[row][c.certs[i].key_algo];
      ++t.row_totals[row];
      ++overall[c.certs[i].key_algo];
      ++total;
    }
  }
  for (const auto& [row, n] : t.row_totals) {
    t.rows.push_back(row);
    for (const auto& [algo, count] : t.counts[row])
      t.share[row][algo] = static_cast<double>(count) / static_cast<double>(n);
  }
  for (const auto& [algo, count] : overall)
    if (static_cast<double>(count) / static_cast<double>(total) > min_share) t.columns.push_back(algo);
  return t;
}

std::vector<std::string> cert_csv_header() {
  std::vector<std::string> h = {"domain", "source", "index", "role", "der_len"};
  for (auto f : kAllFields) h.emplace_back(to_string(f));
  h.insert(h.end(), {"structural_overhead", "key_algo", "key_bits", "san_bytes", "san_count", "self_signed",
                     "cross_signed", "flags"});
  return h;
}

std::vector<std::vector<std::string>> cert_csv_rows(const ChainRecord& chain, const TrustStore* store) {
  std::set<std::size_t> cross;
  if (store)
    for (const auto& f : detect_cross_signed(chain, *store)) cross.insert(f.index);
  const auto cruise = cruise_liner_score(chain);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < chain.certs.size(); ++i) {
    const auto& c = chain.certs[i];
    std::vector<std::string> r = {chain.domain, std::string(to_string(chain.source)), std::to_string(i),
                                  std::string(to_string(c.role)), std::to_string(c.der_len)};
    for (auto v : c.field_sizes) r.push_back(std::to_string(v));
    std::string flags;
    auto flag = [&](const char* f) { flags += (flags.empty() ? "" : "|") + std::string(f); };
    if (c.self_signed) flag("anchor");
    if (cross.count(i)) flag("cross_signed");
    if (i == 0 && cruise.flagged) flag("cruise_liner");
    r.insert(r.end(), {std::to_string(c.structural_overhead), std::string(to_string(c.key_algo)),
                       std::to_string(c.key_bits), std::to_string(c.san_bytes), std::to_string(c.san_count),
                       c.self_signed ? "1" : "0", cross.count(i) ? "1" : "0", flags});
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::string> chain_csv_header() {
  return {"domain", "source", "cert_count", "total_len", "tls_message_len", "ordered_correctly",
          "parent_chain_id", "large_chain", "included_anchors", "cross_signed", "leaf_san_share"};
}

std::vector<std::string> chain_csv_row(const ChainRecord& chain, const TrustStore* store) {
  char share[32];
  std::snprintf(share, sizeof(share), "%.6f", cruise_liner_score(chain).san_share);
  return {chain.domain,
          std::string(to_string(chain.source)),
          std::to_string(chain.certs.size()),
          std::to_string(chain.total_len),
          std::to_string(tls_certificate_message_len(chain)),
          chain.ordered_correctly ? "1" : "0",
          chain.parent_chain_hex(),
          is_large_chain(chain) ? "1" : "0",
          std::to_string(detect_included_anchor(chain).size()),
          store ? std::to_string(detect_cross_signed(chain, *store).size()) : "",
          share};
}

}  // namespace quicaudit::cert
