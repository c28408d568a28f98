import os
from dotenv import load_dotenv

# Upewnij się, że zmienne środowiskowe są załadowane
load_dotenv()

# Ziarno generatora liczb losowych (deterministyczne raporty)
QMMS_SEED = int(os.getenv("QMMS_SEED", "0"))

# Liczba workerów dla zadań równoległych (0 = liczba rdzeni)
QMMS_JOBS = int(os.getenv("QMMS_JOBS", "0"))

# Katalog wyników
QMMS_OUTPUT_DIR = os.getenv("QMMS_OUTPUT_DIR", "reports")

# ===== SOLVER =====

# Względna luka dualności wymagana do certyfikatu
QMMS_SOLVER_TOL = float(os.getenv("QMMS_SOLVER_TOL", "1e-6"))

# Budżet iteracji metody prymalno-dualnej
QMMS_SOLVER_MAX_ITER = int(os.getenv("QMMS_SOLVER_MAX_ITER", "100000"))

# Tolerancja dopuszczalności gradientów (bezwzględna)
QMMS_FEAS_TOL = float(os.getenv("QMMS_FEAS_TOL", "1e-9"))

# Liczba startów dla wykładników p < 1
QMMS_MULTISTART = int(os.getenv("QMMS_MULTISTART", "8"))

# ===== DIAGNOSTYKA =====

# Próg dystorsji metryki łańcuchowej
QMMS_DISTORTION_THRESHOLD = float(os.getenv("QMMS_DISTORTION_THRESHOLD", "16"))

# Rozdzielczość dyskretyzacji gęstości (punkty na jednostkę długości)
QMMS_GRID_PER_UNIT = int(os.getenv("QMMS_GRID_PER_UNIT", "10000"))

# Multiplikatywna tolerancja porównań z ograniczeniami zamkniętymi
QMMS_BOUND_TOL = float(os.getenv("QMMS_BOUND_TOL", "1.05"))

# Tolerancja przyrostów krzywej całkowalności
QMMS_INTEGRABILITY_TOL = float(os.getenv("QMMS_INTEGRABILITY_TOL", "1e-3"))

# ===== LOGOWANIE =====
QMMS_LOG_LEVEL = os.getenv("QMMS_LOG_LEVEL", "WARNING")
QMMS_LOG_FILE = os.getenv("QMMS_LOG_FILE", "")
