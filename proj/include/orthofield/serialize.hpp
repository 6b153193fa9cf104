#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "orthofield/approximation.hpp"
#include "orthofield/criteria.hpp"
#include "orthofield/exactsys.hpp"
#include "orthofield/fieldmodels.hpp"
#include "orthofield/lattice.hpp"
#include "orthofield/mcharness.hpp"

namespace orthofield {

// ---------------------------------------------------------------------------
// JSON and CSV serialization.  All emitters are pure functions of their
// inputs and use insertion-ordered objects with shortest-round-trip number
// formatting, so identical inputs produce byte-identical documents.  CSV uses
// '.' decimals, no locale, LF line endings.
// ---------------------------------------------------------------------------

using OrderedJson = nlohmann::ordered_json;

// --- lattice types ------------------------------------------------------------
OrderedJson to_json(const MultiIndex& i);    // array of integers
OrderedJson to_json(const DirectionSet& E);  // sorted array of 1-based axes

// Parsers throw std::runtime_error naming the offending key/content.
MultiIndex multi_index_from_json(const OrderedJson& j, const std::string& key);
DirectionSet direction_set_from_json(const OrderedJson& j, int d, const std::string& key);

// --- exact systems --------------------------------------------------------------
// {"d": ..., "weights": [...], "perms": [[...]...], "partition": [...]}
OrderedJson to_json(const FiniteSystem& sys);
FiniteSystem system_from_json(const OrderedJson& doc);  // validates via the system builder

OrderedJson to_json(const PartCertificate& cert);
// Residual/flags plus one entry per part: direction set, values, coboundary
// residual and certificate.
OrderedJson to_json(const DecompositionParts& dec);

// --- field specs ----------------------------------------------------------------
OrderedJson to_json(const LinearFieldSpec& f);
LinearFieldSpec linear_field_from_json(const OrderedJson& doc);

// --- criterion reports -----------------------------------------------------------
OrderedJson to_json(const CriterionReport& rep);
// Fixed-width text table: one row per direction set with partial sum, tail
// bound and sup constant, then the verdict line.
std::string criterion_table(const CriterionReport& rep);

// --- Monte Carlo reports -----------------------------------------------------------
OrderedJson to_json(const MCEstimate& e);
OrderedJson to_json(const DoobReport& rep);
OrderedJson to_json(const UITable& table);
OrderedJson to_json(const ConstantSet& cs);
OrderedJson to_json(const DyadicReport& rep);
OrderedJson to_json(const SheetCovReport& rep);
OrderedJson to_json(const KSReport& rep);
OrderedJson to_json(const CauchyTable& table);

// --- CSV ------------------------------------------------------------------------
std::string csv_number(double x);  // shortest round-trip decimal form

// "p,estimate,std_error"
std::string profile_csv(const std::vector<ProfilePoint>& points);
// "<key>,estimate,std_error", one row per (value, estimate) pair
std::string sweep_csv(const std::string& key,
                      const std::vector<std::pair<int64_t, MCEstimate>>& rows);
// "n,R,value" with n rendered as 8x8-style geometry
std::string ui_csv(const UITable& table);
// "t1,...,td,value" over the full grid
std::string sheet_csv(const SheetPath& path);

}  // namespace orthofield
