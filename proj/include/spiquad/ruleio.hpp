#pragma once

// Rule files, external node lists, the on-disk catalog and CSV export.
// The rule file layout is documented in docs/rule-format.md.

#include "spiquad/builder.hpp"
#include "spiquad/verifier.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spiquad {

inline constexpr int kRuleFormatVersion = 1;

struct RuleFile {
  int version = kRuleFormatVersion;
  QuadRule rule;
  int precision_bits = 0;
  Real residual;  // as stated in the header
  bool expanded = false;
};

/// Text of a rule file. Numbers carry ceil(p log10 2) + 1 significant digits
/// at working precision p, enough to read back the same value.
std::string format_rule(const QuadRule& rule, bool expanded = false);
/// Parses and re-certifies: the recomputed residual may exceed the stated one
/// by at most 10x (stated values below 2^-precision count as 2^-precision),
/// and the rule must be positive, interior and symmetric.
/// Throws ParseError, VersionError or CertificationFailure.
RuleFile parse_rule(const std::string& text);

/// Throws CertificationFailure unless the rule's residual is below `tolerance`.
void write_rule(const QuadRule& rule, const std::filesystem::path& path, const Real& tolerance, bool expanded = false);
/// Reads at the precision stated in the file. Throws MissingData when absent.
RuleFile read_rule(const std::filesystem::path& path);

struct IngestOptions {
  /// Residual and symmetry tolerance; derived from the digits in the file
  /// when absent.
  std::optional<Real> tolerance;
  /// Refine with the LMA to the working tolerance after validation.
  bool polish = false;
  SolverConfig solver = SolverConfig::for_mode(PrecisionMode::fast);
};

/// Whitespace-separated columns x [y [z]] w, one node per line, `#` comments.
/// Throws ParseError, CertificationFailure or NotSymmetric.
ExternalRuleData ingest_external(const std::filesystem::path& path, DomainKind d, int degree,
                                 const IngestOptions& options = {});

/// Triangle and tetrahedron rules from `dir/<domain>-<q>.txt`, trying degrees
/// q..q+4 and falling back to `fallback` (if set), else MissingData.
AuxRuleSource data_aux_source(const std::filesystem::path& dir, AuxRuleSource fallback, IngestOptions options = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

struct CatalogEntry {
  DomainKind domain{};
  int degree = 0;
  long nodes = 0;
  std::string file;  // relative to the catalog root
  std::string checksum;
};

/// Directory of rule files, one best rule per (domain, degree), indexed by
/// manifest.json. Writers hold an exclusive lock on the manifest.
class Catalog {
public:
  explicit Catalog(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::vector<CatalogEntry> entries() const;
  std::optional<CatalogEntry> entry(DomainKind d, int degree) const;
  /// Verifies the checksum (CertificationFailure on mismatch) and re-certifies.
  std::optional<QuadRule> find(DomainKind d, int degree) const;
  /// Stores the rule when the slot is empty or the rule has strictly fewer
  /// nodes. Returns whether it was stored.
  bool insert(const QuadRule& rule, const Real& tolerance);

private:
  std::filesystem::path root_;
};

std::string convergence_csv(const ConvergenceReport& report);
std::string efficiency_csv(const std::vector<EfficiencyReport>& rows);

}  // namespace spiquad
