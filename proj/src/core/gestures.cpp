#include <sstream>

#include "theta/core/hand.hpp"

namespace theta {

namespace {

// Keep in sync with data/gesture_angles.csv (checked by the unit tests).
constexpr const char* kBuiltinTable = R"csv(gesture_id,gesture_name,thumb_mcp_deg,thumb_pip_deg,thumb_dip_deg,index_mcp_deg,index_pip_deg,index_dip_deg,middle_mcp_deg,middle_pip_deg,middle_dip_deg,ring_mcp_deg,ring_pip_deg,ring_dip_deg,pinky_mcp_deg,pinky_pip_deg,pinky_dip_deg
1,Closed Fist,90,90,90,90,90,90,90,90,90,90,90,90,90,90,90
2,Open Palm,180,180,180,180,180,180,180,180,180,180,180,180,180,180,180
3,Number One,90,90,90,180,180,180,90,90,90,90,90,90,90,90,90
4,Number Two,90,90,90,180,180,180,180,180,180,90,90,90,90,90,90
5,Number Three,90,90,90,180,180,180,180,180,180,180,180,180,90,90,90
6,Number Four,90,90,90,180,180,180,180,180,180,180,180,180,180,180,180
7,Thumbs Up,180,180,180,90,90,90,90,90,90,90,90,90,90,90,90
8,L Shape,180,180,180,180,180,180,90,90,90,90,90,90,90,90,90
9,Thumb Index Middle,180,180,180,180,180,180,180,180,180,90,90,90,90,90,90
10,Call Me,180,180,180,90,90,90,90,90,90,90,90,90,180,180,180
11,Horns,90,90,90,180,180,180,90,90,90,90,90,90,180,180,180
12,Love You,180,180,180,180,180,180,90,90,90,90,90,90,180,180,180
13,Pinky Up,90,90,90,90,90,90,90,90,90,90,90,90,180,180,180
14,Middle Up,90,90,90,90,90,90,180,180,180,90,90,90,90,90,90
15,Ring Up,90,90,90,90,90,90,90,90,90,180,180,180,90,90,90
16,Index Middle Pinky,90,90,90,180,180,180,180,180,180,90,90,90,180,180,180
17,Four Thumb Half,140,130,140,180,180,180,180,180,180,180,180,180,180,180,180
18,Flat Bend,180,180,180,90,180,180,90,180,180,90,180,180,90,180,180
19,Flat Bend Thumb In,90,90,90,90,180,180,90,180,180,90,180,180,90,180,180
20,Claw,140,130,140,180,100,100,180,100,100,180,100,100,180,100,100
21,Hook Index,90,90,90,180,100,100,90,90,90,90,90,90,90,90,90
22,Hook Two,90,90,90,180,100,100,180,100,100,90,90,90,90,90,90
23,Half Curl,140,130,140,140,130,140,140,130,140,140,130,140,140,130,140
24,Half Curl Thumb Out,180,180,180,140,130,140,140,130,140,140,130,140,140,130,140
25,Point Bent,90,90,90,90,180,180,90,90,90,90,90,90,90,90,90
26,Gun Bent,180,180,180,90,180,180,90,180,180,90,90,90,90,90,90
27,OK Sign,140,130,140,140,130,140,180,180,180,180,180,180,180,180,180
28,Pinch,140,130,140,140,130,140,90,90,90,90,90,90,90,90,90
29,Two Bent,90,90,90,90,180,180,90,180,180,90,90,90,90,90,90
30,Index Half,90,90,90,140,130,140,90,90,90,90,90,90,90,90,90
31,C Shape,180,180,180,180,100,100,180,100,100,180,100,100,180,100,100
32,Middle Ring Up,90,90,90,90,90,90,180,180,180,180,180,180,90,90,90
33,Index Pinky Bent,90,90,90,90,180,180,90,90,90,90,90,90,90,180,180
34,Three Hook,90,90,90,180,100,100,180,100,100,180,100,100,90,90,90
35,Four Hook,90,90,90,180,100,100,180,100,100,180,100,100,180,100,100
36,Thumb Bent Fist,140,130,140,90,90,90,90,90,90,90,90,90,90,90,90
37,Wave Down,140,130,140,90,180,180,90,180,180,90,180,180,90,180,180
38,Ring Pinky Up,90,90,90,90,90,90,90,90,90,180,180,180,180,180,180
39,Thumb Index Hook,180,180,180,180,100,100,90,90,90,90,90,90,90,90,90
40,Middle Ring Pinky Up,90,90,90,90,90,90,180,180,180,180,180,180,180,180,180
)csv";

}  // namespace

const std::vector<GestureAnnotation>& builtin_gestures() {
  static const std::vector<GestureAnnotation> table = [] {
    std::istringstream in(kBuiltinTable);
    return parse_gesture_table(in);
  }();
  return table;
}

}  // namespace theta
