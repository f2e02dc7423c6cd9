#pragma once

#include "issauth/config.hpp"
#include "issauth/error.hpp"
#include "issauth/eval.hpp"
#include "issauth/fpfh.hpp"
#include "issauth/geometry.hpp"
#include "issauth/iss.hpp"
#include "issauth/kdtree.hpp"
#include "issauth/pipeline.hpp"
#include "issauth/ply.hpp"
#include "issauth/preprocess.hpp"
#include "issauth/registration.hpp"
#include "issauth/rng.hpp"
#include "issauth/template.hpp"
