OUTSIDE_REGION = "ERR point lies outside the region"
NON_POSITIVE_DISTANCE = "ERR distance must be positive"
NEGATIVE_DENSITY = "ERR density must be non-negative"
EMPTY_BEAM_SEQUENCE = "ERR at least one beam is required to decide wake-up"
INVALID_BEAM = "ERR beam half width must lie in (0, pi/2) and reach must be positive"
ORIGIN_NOT_ON_BOUNDARY = "ERR beam origin must lie on the region boundary"
TOO_MANY_ONES = "ERR a packet cannot contain more ones than bits"
TOO_FEW_ANCHORS = "ERR at least three anchors are required"
COLLINEAR_ANCHORS = "ERR anchors are collinear, position is not observable"
MALFORMED_ANNULUS = "ERR covered annulus must satisfy 0 <= inner < outer <= radius"
FRAMES_TOO_LONG = "ERR wake-up sequence is longer than the codebook pattern"
NO_ROUTE = "ERR no route between source and destination"
AMBIGUOUS_WAKE = "ERR beam plan cannot isolate the target at the minimum beam width"
NEGATIVE_AMOUNT = "ERR amount must be non-negative"
INVALID_CONFIG = "ERR invalid scenario configuration"
