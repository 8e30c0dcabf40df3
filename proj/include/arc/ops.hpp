#pragma once

#include <optional>
#include <string_view>

namespace arc {

enum class ArithOp { Add, Sub, Mul, Div };
enum class AggFn { Sum, Count, Avg, Min, Max, CountDistinct };
enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(ArithOp op);
std::string_view to_string(AggFn fn);
std::string_view to_string(CompareOp op);

std::optional<ArithOp> parse_arith_op(std::string_view s);
std::optional<AggFn> parse_agg_fn(std::string_view s);
std::optional<CompareOp> parse_compare_op(std::string_view s);

/// a op b  <=>  b flipped(op) a
CompareOp flip(CompareOp op);

}  // namespace arc
