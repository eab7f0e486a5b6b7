#pragma once

#include "aniso/border_propagation.hpp"
#include "aniso/compositor.hpp"
#include "aniso/detector_protocol.hpp"
#include "aniso/error.hpp"
#include "aniso/geometry.hpp"
#include "aniso/image.hpp"
#include "aniso/metrics.hpp"
#include "aniso/mock_detector.hpp"
#include "aniso/pipeline.hpp"
#include "aniso/png_io.hpp"
#include "aniso/probe_planner.hpp"
#include "aniso/region.hpp"
#include "aniso/reporting.hpp"
#include "aniso/rle.hpp"
#include "aniso/scene_catalog.hpp"
