// Copyright 2026 The qcvrp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace qcvrp::env {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(const Point& a, const Point& b);

// Sign of the cross product (b - a) x (c - a): +1 counter-clockwise, -1
// clockwise, 0 collinear.
int orientation(const Point& a, const Point& b, const Point& c);

// True iff the open segments share an interior point. Endpoint contact and
// collinear overlap do not count.
bool segments_properly_intersect(const Point& a1, const Point& a2,
                                 const Point& b1, const Point& b2);

}  // namespace qcvrp::env
