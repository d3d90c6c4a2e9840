from calibrate.calibration import (
    CalibrationTargets,
    ProfileTemplate,
    TargetCheck,
    ValidationReport,
    calibrate_profile,
    fit_template,
    validate_fixture,
    write_fixture,
)
