"""Part names, evaluation joints and the part-joint correspondence table."""

PART_NAMES = (
    "Abdomen",
    "Left Thigh",
    "Right Thigh",
    "Left Calf",
    "Right Calf",
    "Chest",
    "Left Foot",
    "Right Foot",
    "Head",
    "Left Upper Arm",
    "Right Upper Arm",
    "Left Forearm",
    "Right Forearm",
    "Left Hand",
    "Right Hand",
)

JOINT_NAMES = (
    "Pelvis",
    "Right Hip",
    "Right Knee",
    "Right Ankle",
    "Left Hip",
    "Left Knee",
    "Left Ankle",
    "Torso",
    "Neck",
    "Nose",
    "Head",
    "Left Shoulder",
    "Left Elbow",
    "Left Wrist",
    "Right Shoulder",
    "Right Elbow",
    "Right Wrist",
)

# Which evaluation joints each part regresses. The foot rows are assigned to
# the ankle on the same side as the foot.
PART_JOINTS = {
    "Abdomen": ("Pelvis", "Right Hip", "Left Hip", "Torso"),
    "Left Thigh": ("Left Hip", "Left Knee"),
    "Right Thigh": ("Right Hip", "Right Knee"),
    "Left Calf": ("Left Knee", "Left Ankle"),
    "Right Calf": ("Right Knee", "Right Ankle"),
    "Chest": ("Torso", "Neck", "Left Shoulder", "Right Shoulder"),
    "Left Foot": ("Left Ankle",),
    "Right Foot": ("Right Ankle",),
    "Head": ("Neck", "Nose", "Head"),
    "Left Upper Arm": ("Left Shoulder", "Left Elbow"),
    "Right Upper Arm": ("Right Shoulder", "Right Elbow"),
    "Left Forearm": ("Left Elbow", "Left Wrist"),
    "Right Forearm": ("Right Elbow", "Right Wrist"),
    "Left Hand": ("Left Wrist",),
    "Right Hand": ("Right Wrist",),
}


def joint_indices(part_name):
    """Indices into :data:`JOINT_NAMES` for the joints of ``part_name``."""
    return [JOINT_NAMES.index(j) for j in PART_JOINTS[part_name]]


def joint_owners(part_names=PART_NAMES):
    """For each evaluation joint, the list of part ids that regress it."""
    owners = [[] for _ in JOINT_NAMES]
    for pid, name in enumerate(part_names):
        for j in PART_JOINTS.get(name, ()):
            owners[JOINT_NAMES.index(j)].append(pid)
    return owners
