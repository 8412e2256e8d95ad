"""
Progress Display - Spinners for long stages and an epoch progress bar.
"""

from contextlib import contextmanager
from typing import Callable, Iterator

from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.status import Status

from sentifuse.training.trainer import EpochRecord
from sentifuse.ui.console import get_error_console


@contextmanager
def status_spinner(message: str, spinner: str = "dots") -> Iterator[Status]:
    """Spinner on standard error while the block runs."""
    status = Status(message, spinner=spinner, console=get_error_console())
    try:
        status.start()
        yield status
    finally:
        status.stop()


@contextmanager
def epoch_progress(total_epochs: int, label: str = "training") -> Iterator[Callable[[EpochRecord], None]]:
    """
    Progress bar over epochs; yields the callback ``train_loop`` calls
    after each epoch.
    """
    progress = Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        TextColumn("val_loss {task.fields[val_loss]}"),
        TimeElapsedColumn(),
        console=get_error_console(),
        transient=True,
    )
    task = progress.add_task(label, total=total_epochs, val_loss="-")

    def on_epoch(record: EpochRecord) -> None:
        progress.update(task, completed=record.epoch, val_loss=f"{record.val_loss:.4f}")

    with progress:
        yield on_epoch


__all__ = ["status_spinner", "epoch_progress"]
