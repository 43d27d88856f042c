//! Bandwidth billing: each account gets a free daily byte quota; bytes
//! beyond it are paid in sun from the account balance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::Writer;

pub const MS_PER_DAY: u64 = 86_400_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeeSchedule {
    pub free_bandwidth_per_day: u64,
    pub sun_per_byte: u64,
}

impl Default for FeeSchedule {
    fn default() -> Self {
        Self {
            free_bandwidth_per_day: 5000,
            sun_per_byte: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountMeta {
    pub next_nonce: u64,
    pub free_bandwidth_remaining: u64,
    /// Day number (ms / 86 400 000) the quota above belongs to.
    pub quota_day: u64,
    pub balance_sun: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("insufficient balance: fee {fee} sun, balance {balance} sun")]
pub struct InsufficientBalance {
    pub fee: u64,
    pub balance: u64,
}

impl AccountMeta {
    pub fn fresh(schedule: &FeeSchedule, now_ms: u64, balance_sun: u64) -> Self {
        Self {
            next_nonce: 0,
            free_bandwidth_remaining: schedule.free_bandwidth_per_day,
            quota_day: now_ms / MS_PER_DAY,
            balance_sun,
        }
    }

    /// Restores the full quota when `now_ms` falls on a later day.
    pub fn refresh_quota(&mut self, schedule: &FeeSchedule, now_ms: u64) {
        let day = now_ms / MS_PER_DAY;
        if day > self.quota_day {
            self.quota_day = day;
            self.free_bandwidth_remaining = schedule.free_bandwidth_per_day;
        }
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.u64(self.next_nonce)
            .u64(self.free_bandwidth_remaining)
            .u64(self.quota_day)
            .u64(self.balance_sun);
    }
}

/// Bills `tx_size` bytes against the account. Nothing changes on error.
pub fn charge_bandwidth(
    account: &mut AccountMeta,
    tx_size: u64,
    schedule: &FeeSchedule,
) -> Result<u64, InsufficientBalance> {
    if tx_size <= account.free_bandwidth_remaining {
        account.free_bandwidth_remaining -= tx_size;
        return Ok(0);
    }
    let overflow = tx_size - account.free_bandwidth_remaining;
    let fee = overflow.saturating_mul(schedule.sun_per_byte);
    if fee > account.balance_sun {
        return Err(InsufficientBalance {
            fee,
            balance: account.balance_sun,
        });
    }
    account.balance_sun -= fee;
    account.free_bandwidth_remaining = 0;
    Ok(fee)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn account(quota: u64, balance: u64) -> AccountMeta {
        AccountMeta {
            next_nonce: 0,
            free_bandwidth_remaining: quota,
            quota_day: 0,
            balance_sun: balance,
        }
    }

    #[test]
    fn within_quota_is_free() {
        let mut a = account(5000, 0);
        assert_eq!(charge_bandwidth(&mut a, 300, &FeeSchedule::default()), Ok(0));
        assert_eq!(a.free_bandwidth_remaining, 4700);
    }

    #[test]
    fn zero_size_changes_nothing() {
        let mut a = account(5000, 0);
        assert_eq!(charge_bandwidth(&mut a, 0, &FeeSchedule::default()), Ok(0));
        assert_eq!(a, account(5000, 0));
    }

    #[test]
    fn exhausted_quota_bills_every_byte() {
        let mut a = account(0, 1_000_000);
        assert_eq!(charge_bandwidth(&mut a, 250, &FeeSchedule::default()), Ok(250_000));
        assert_eq!(a.balance_sun, 750_000);
    }

    #[test]
    fn partial_overflow_bills_only_the_excess() {
        let mut a = account(100, 1_000_000);
        assert_eq!(charge_bandwidth(&mut a, 250, &FeeSchedule::default()), Ok(150_000));
        assert_eq!(a.free_bandwidth_remaining, 0);
    }

    #[test]
    fn insufficient_balance_leaves_account_untouched() {
        let mut a = account(0, 10);
        let before = a;
        assert_eq!(
            charge_bandwidth(&mut a, 1, &FeeSchedule::default()),
            Err(InsufficientBalance { fee: 1000, balance: 10 })
        );
        assert_eq!(a, before);
    }

    #[test]
    fn quota_resets_on_new_day() {
        let s = FeeSchedule::default();
        let mut a = AccountMeta::fresh(&s, 10, 0);
        charge_bandwidth(&mut a, 4000, &s).unwrap();
        a.refresh_quota(&s, MS_PER_DAY - 1);
        assert_eq!(a.free_bandwidth_remaining, 1000);
        a.refresh_quota(&s, MS_PER_DAY);
        assert_eq!(a.free_bandwidth_remaining, 5000);
        assert_eq!(a.quota_day, 1);
    }
}
