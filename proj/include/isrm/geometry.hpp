#pragma once

#include <vector>

#include "isrm/linalg.hpp"

namespace isrm {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Axis-aligned box in the base domain.
struct Box {
    std::vector<Interval> sides;

    Box() = default;
    explicit Box(std::vector<Interval> s) : sides(std::move(s)) {}

    int dim() const { return static_cast<int>(sides.size()); }
    double volume() const;
    bool contains(const Point& s) const;
    /// Closed containment with a small slack.
    bool contains_box(const Box& other, double slack = 0.0) const;
    Point midpoint() const;
    bool degenerate() const { return volume() <= 0.0; }
};

/// Intersection of two boxes; empty (zero-volume) boxes are possible.
Box intersect(const Box& a, const Box& b);
/// Volume of the intersection.
double overlap(const Box& a, const Box& b);

/// Finite union of pairwise disjoint boxes.
class MeasurableSet {
public:
    MeasurableSet() = default;
    /// Throws OverlappingPieces when two boxes overlap with positive volume.
    explicit MeasurableSet(std::vector<Box> boxes);
    static MeasurableSet single(Box box);

    const std::vector<Box>& boxes() const { return boxes_; }
    int dim() const { return boxes_.empty() ? 0 : boxes_.front().dim(); }
    double volume() const;
    bool contains(const Point& s) const;
    bool empty() const;

    MeasurableSet intersect(const Box& b) const;
    MeasurableSet intersect(const MeasurableSet& other) const;
    /// Union with a set disjoint from this one.
    MeasurableSet disjoint_union(const MeasurableSet& other) const;

private:
    std::vector<Box> boxes_;
};

/// Box minus a union of boxes, as a list of disjoint boxes (rectilinear decomposition).
std::vector<Box> subtract(const Box& box, const std::vector<Box>& holes);

/// Sorted coordinate breakpoints per axis.
using Breakpoints = std::vector<std::vector<double>>;

void merge_breakpoints(Breakpoints& into, const Breakpoints& from);

}  // namespace isrm
