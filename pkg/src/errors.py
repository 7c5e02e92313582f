"""Hierarquia de erros do motor de formas normais"""


class CREngineError(Exception):
    """Erro base do motor"""

    emoji = "❌"

    def __init__(self, message: str = "", **details):
        self.details = details
        super().__init__(f"{self.emoji} {message}" if message else self.emoji)


# Erros do usuário (exit code 1)
class UserInputError(CREngineError):
    pass


class ParseError(UserInputError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        self.line = line
        self.column = column
        super().__init__(f"Erro de sintaxe na linha {line}, coluna {column}: {message}")


class NotReal(UserInputError):
    pass


class NotNormalCoordinates(UserInputError):
    pass


class NotRankZero(UserInputError):
    pass


class NotTwoNondegenerate(UserInputError):
    pass


class ConstraintViolation(UserInputError):
    pass


class SubstitutionError(UserInputError):
    pass


# Erros algébricos
class AlgebraError(CREngineError):
    pass


class BackendMismatch(AlgebraError):
    pass


class Infeasible(AlgebraError):
    pass


class NeedsRadical(AlgebraError):
    """Raiz irracional exigida pelo backend exato (exit code 3)"""

    emoji = "⚠️"


class GraphDegenerate(AlgebraError):
    pass


class SingularLinearPart(AlgebraError):
    pass


class NotSolvable(AlgebraError):
    pass


# Resultados e violações do pipeline
class PipelineError(CREngineError):
    pass


class ExcludedRHalf(PipelineError):
    """Configuração |r| = 1/2 (exit code 2)"""

    emoji = "🚫"


class InternalRankMismatch(PipelineError):
    emoji = "🚨"


class ConstraintViolated(PipelineError):
    emoji = "🚨"


class NotInClass(PipelineError):
    """Cúbica fora das famílias tratadas pelo normalizador"""

    emoji = "🚫"


EXIT_CODES = {
    ExcludedRHalf: 2,
    NeedsRadical: 3,
}


def exit_code_for(error: Exception) -> int:
    """Mapeia um erro para o código de saída da CLI"""
    for cls, code in EXIT_CODES.items():
        if isinstance(error, cls):
            return code
    return 1
