#pragma once

#include "perch/calibration_run.hpp"
#include "perch/camera.hpp"
#include "perch/config.hpp"
#include "perch/detector.hpp"
#include "perch/error.hpp"
#include "perch/fusion.hpp"
#include "perch/geometry.hpp"
#include "perch/kalman.hpp"
#include "perch/lms.hpp"
#include "perch/pnp.hpp"
#include "perch/scenario.hpp"
